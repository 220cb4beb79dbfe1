#pragma once

#include "semkit/degrade.hpp"
#include "semkit/losses.hpp"

#include <nlohmann/json_fwd.hpp>

#include <functional>
#include <vector>

namespace semkit {

/// Fixed classical-baseline settings.
struct RestoreConfig {
  int rl_iterations = 30;
  double wiener_balance = 0.01;
  PsfParams fixed_psf{15.5, 15.5, 1.95, 0.0};
  int variational_steps = 200;
  double variational_step_size = 1e-3;
  LossWeights weights;

  void validate() const;
};

/// Sliding-window layout: square tiles of `tile` pixels overlapping by `overlap`.
struct TileSpec {
  Eigen::Index tile = 224;
  Eigen::Index overlap = 8;

  void validate() const;
  Eigen::Index stride() const { return tile - overlap; }
};

/// Richardson–Lucy with mirror boundaries, started from max(y, 1e-6).
Image richardson_lucy(const Image& y, const Kernel& kernel, int iterations);

/// conj(H)·Y / (|H|² + balance) on a mirror extension of y, cropped back to the input extent.
/// The extension is the whole-sample period 2(n-1) per axis, which matches the reflect
/// boundary of the forward model, unless that length has a prime factor above 31.
Image wiener(const Image& y, const Kernel& kernel, double balance);

struct VariationalResult {
  Image image;
  std::vector<double> objective;  // objective at the start and after each accepted step
  int accepted_steps = 0;
};

/// Gradient descent on Charb(K∗x, y) + λe·Edge(K∗x, y) + λtv·TV(x) from x = y.
/// Backtracking halves the step (at most 30 times per iteration) until the
/// objective does not increase; the trace is therefore non-increasing.
VariationalResult variational_restore(const Image& y, const Kernel& kernel, const LossWeights& weights,
                                      int steps, double step_size);

/// 3×3 median with mirror boundaries.
Image median3x3(const Image& img);

/// 1.4826 · MAD of img − median3x3(img).
double estimate_noise_sigma(const Image& img);

/// Tile origins in the padded frame, per axis.
struct TileGrid {
  Eigen::Index pad_top = 0, pad_bottom = 0, pad_left = 0, pad_right = 0;
  std::vector<Eigen::Index> row_origins;
  std::vector<Eigen::Index> col_origins;
};

/// Pads every side by at least `overlap` and extends the far sides until the
/// stride grid closes exactly.
TileGrid plan_tiles(Eigen::Index rows, Eigen::Index cols, const TileSpec& spec);

/// Number of tiles covering each pixel of the original image.
Image tile_coverage(Eigen::Index rows, Eigen::Index cols, const TileSpec& spec);

/// Separable Hann window, product floored at 1e-3.
Image hann_window(Eigen::Index tile);

using TileOp = std::function<Image(const Image&)>;

/// Runs `op` on overlapping tiles of the reflect-padded image and blends the
/// results with Hann weights, normalising by the accumulated weight map.
Image tiled_apply(const Image& img, const TileSpec& spec, const TileOp& op);

void to_json(nlohmann::json& j, const RestoreConfig& c);
void from_json(const nlohmann::json& j, RestoreConfig& c);
void to_json(nlohmann::json& j, const TileSpec& t);
void from_json(const nlohmann::json& j, TileSpec& t);

}  // namespace semkit
