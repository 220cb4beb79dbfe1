#pragma once

#include "semkit/fft.hpp"
#include "semkit/psf.hpp"
#include "semkit/random.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <utility>

namespace semkit {

/// Forward-model parameters. Gain `a` is dimensionless; offset `b` and read-noise
/// `sigma` are in 0–255 code units; `dose` is electrons per code unit.
struct DegradeParams {
  PsfParams psf;
  double a = 1.0;
  double b = 0.0;
  double sigma = 0.0;
  double dose = 1.0;

  void validate() const;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double midpoint() const { return 0.5 * (lo + hi); }
};

/// Sampling bounds for each parameter; the defaults cover the usual SEM operating range.
struct ParamRanges {
  Range r_x{1.0, 30.0};
  Range r_y{1.0, 30.0};
  Range beta{1.9, 2.0};
  Range theta{0.0, 3.14};
  Range a{0.99, 1.1};
  Range b{1.0, 25.0};
  Range sigma{1.0, 10.0};
  Range dose{1.0, 50.0};

  void validate() const;
};

enum class NoiseMode {
  PoissonGaussian,
  /// Test-only: bypasses both noise terms.
  Noiseless,
};

/// Reflect-pads by the given margins using mirror_index (edge sample not repeated).
Image pad_reflect(const Image& img, Eigen::Index top, Eigen::Index bottom, Eigen::Index left,
                  Eigen::Index right);

/// Same-size convolution with mirror boundaries, reusable for one kernel and image
/// shape. Small kernels are summed directly; larger ones go through a cached
/// real FFT of the reflect-padded image.
class ReflectConvolver {
 public:
  ReflectConvolver(const Kernel& kernel, Eigen::Index rows, Eigen::Index cols);

  Image convolve(const Image& x);
  /// Convolution with the 180°-rotated kernel.
  Image correlate(const Image& x);
  /// Exact adjoint of convolve(): <convolve(x), g> == <x, adjoint(g)>.
  Image adjoint(const Image& g);

  const Kernel& kernel() const { return kernel_; }

 private:
  Image filter_grid(const RealSpectrum& kspec);
  Image direct(const Image& x, const Image& weights) const;
  void check_shape(const Image& x) const;

  Kernel kernel_;
  Eigen::Index rows_, cols_, half_;
  bool use_fft_;
  std::optional<RealFft2> fft_;
  RealSpectrum kspec_;
  RealSpectrum kspec_flipped_;
  Image grid_;
};

/// Requires kernel.size() < 2 · min(H, W).
Image convolve_reflect(const Image& img, const Kernel& kernel);

/// y = N(a · (x ∗ h) + b) evaluated on the 0–255 code scale, returned in [0,1].
/// Shot noise draws from the stream (seed.seed, seed.index, "shot") and read noise
/// from (seed.seed, seed.index, "read"); seed.purpose is not used.
Image apply_forward_model(const Image& img, const Kernel& kernel, const DegradeParams& params,
                          const Seed& seed, NoiseMode mode = NoiseMode::PoissonGaussian);

/// Builds the kernel from params.psf.
Image apply_forward_model(const Image& img, const DegradeParams& params, const Seed& seed,
                          NoiseMode mode = NoiseMode::PoissonGaussian);

/// Independent uniform draws in the order r_x, r_y, beta, theta, a, b, sigma, dose.
DegradeParams sample_params(const ParamRanges& ranges, const Seed& seed);

DegradeParams midpoint_params(const ParamRanges& ranges);

void to_json(nlohmann::json& j, const DegradeParams& p);
void from_json(const nlohmann::json& j, DegradeParams& p);
void to_json(nlohmann::json& j, const ParamRanges& r);
void from_json(const nlohmann::json& j, ParamRanges& r);

}  // namespace semkit
