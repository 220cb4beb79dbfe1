#include "semkit/restore.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace semkit {
namespace {

constexpr double kRlInitFloor = 1e-6;
constexpr double kRlDivFloor = 1e-12;
constexpr double kRlNegativeSlack = 1e-9;
constexpr double kHannFloor = 1e-3;
constexpr int kMaxHalvings = 30;

Eigen::Index wrap(Eigen::Index i, Eigen::Index n) {
  i %= n;
  return i < 0 ? i + n : i;
}

bool smooth_length(Eigen::Index n) {
  for (Eigen::Index p = 2; p <= 31 && n > 1; ++p) {
    while (n % p == 0) n /= p;
  }
  return n == 1;
}

// Periodic mirror extension used by the Wiener filter. The whole-sample period 2(n-1)
// reproduces the reflect boundary of the forward model exactly; the half-sample period 2n is
// also seamless. Only when both lengths factor badly is the image mirror-padded to a fast size.
struct Extension {
  Eigen::Index period;
  Eigen::Index offset;
  bool half_sample;

  Eigen::Index source(Eigen::Index i, Eigen::Index n) const {
    if (!half_sample) return mirror_index(i - offset, n);
    const Eigen::Index r = i % period;
    return r < n ? r : period - 1 - r;
  }
};

Extension wiener_extension(Eigen::Index n, Eigen::Index half) {
  const Eigen::Index whole = n == 1 ? 1 : 2 * (n - 1);
  if (smooth_length(whole)) return {whole, 0, false};
  if (smooth_length(2 * n)) return {2 * n, 0, true};
  const Eigen::Index period = next_fast_size(std::max(whole, n + 2 * half));
  return {period, (period - n) / 2, false};
}

double median(std::vector<double>& v) {
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

struct Objective {
  double value;
  Image grad;
};

Objective variational_objective(const Image& x, const Image& y, ReflectConvolver& conv,
                                const LossWeights& w, bool with_grad) {
  const Image blurred = conv.convolve(x);
  const LossValue fid = charbonnier(blurred, y, w.epsilon);
  const LossValue edge = edge_loss(blurred, y);
  const LossValue tv = tv_loss(x);
  Objective out{fid.value + w.lambda_e * edge.value + w.lambda_tv * tv.value, {}};
  if (with_grad) out.grad = conv.adjoint(fid.grad + w.lambda_e * edge.grad) + w.lambda_tv * tv.grad;
  return out;
}

std::vector<Eigen::Index> axis_origins(Eigen::Index n, const TileSpec& spec, Eigen::Index& pad_after) {
  const Eigen::Index needed = n + 2 * spec.overlap;
  Eigen::Index count = 1;
  if (needed > spec.tile) count = (needed - spec.tile + spec.stride() - 1) / spec.stride() + 1;
  const Eigen::Index span = spec.tile + (count - 1) * spec.stride();
  pad_after = span - n - spec.overlap;
  std::vector<Eigen::Index> origins(count);
  for (Eigen::Index i = 0; i < count; ++i) origins[i] = i * spec.stride();
  return origins;
}

}  // namespace

void RestoreConfig::validate() const {
  if (rl_iterations < 1) throw ArgumentError("rl_iterations must be >= 1");
  if (!(wiener_balance > 0.0)) throw ArgumentError("wiener_balance must be positive");
  if (variational_steps < 0) throw ArgumentError("variational_steps must be >= 0");
  if (!(variational_step_size > 0.0)) throw ArgumentError("variational_step_size must be positive");
  fixed_psf.validate();
  weights.validate();
}

void TileSpec::validate() const {
  if (!(overlap > 0 && overlap < tile)) throw ArgumentError("tile spec requires 0 < overlap < tile");
}

Image richardson_lucy(const Image& y, const Kernel& kernel, int iterations) {
  if (iterations < 1) throw ArgumentError("richardson_lucy: iterations must be >= 1");
  if (y.size() == 0 || !y.allFinite()) throw ArgumentError("richardson_lucy: input must be finite and non-empty");
  // FFT blurs of non-negative data carry round-off of order 1e-17; only real negatives are rejected.
  if (y.minCoeff() < -kRlNegativeSlack * std::max(1.0, y.maxCoeff())) {
    throw ArgumentError("richardson_lucy: input must be >= 0");
  }
  const Image y0 = y.cwiseMax(0.0);
  ReflectConvolver conv(kernel, y.rows(), y.cols());
  Image x = y0.cwiseMax(kRlInitFloor);
  for (int it = 0; it < iterations; ++it) {
    const Image blurred = conv.convolve(x);
    const Image ratio = y0 / blurred.cwiseMax(kRlDivFloor);
    x = (x * conv.correlate(ratio)).cwiseMax(0.0);
  }
  return x;
}

Image wiener(const Image& y, const Kernel& kernel, double balance) {
  if (!(balance > 0.0)) throw ArgumentError("wiener: balance must be positive");
  if (y.size() == 0) throw ArgumentError("wiener: empty image");
  const Eigen::Index rows = y.rows(), cols = y.cols();
  const Extension er = wiener_extension(rows, kernel.half());
  const Extension ec = wiener_extension(cols, kernel.half());
  const Eigen::Index pr = er.period, pc = ec.period;

  Image ext(pr, pc);
  for (Eigen::Index r = 0; r < pr; ++r) {
    for (Eigen::Index c = 0; c < pc; ++c) ext(r, c) = y(er.source(r, rows), ec.source(c, cols));
  }
  Image kgrid = Image::Zero(pr, pc);
  const Image& w = kernel.weights();
  const Eigen::Index h = kernel.half();
  for (Eigen::Index a = 0; a < w.rows(); ++a) {
    for (Eigen::Index b = 0; b < w.cols(); ++b) kgrid(wrap(a - h, pr), wrap(b - h, pc)) += w(a, b);
  }

  RealFft2 fft(pr, pc);
  const RealSpectrum hs = fft.forward(kgrid);
  const RealSpectrum xs = hs.conjugate() * fft.forward(ext) / (hs.abs2() + balance);
  return fft.inverse(xs).block(er.offset, ec.offset, rows, cols);
}

VariationalResult variational_restore(const Image& y, const Kernel& kernel, const LossWeights& weights,
                                      int steps, double step_size) {
  weights.validate();
  if (!(step_size > 0.0)) throw ArgumentError("variational_restore: step size must be positive");
  if (steps < 0) throw ArgumentError("variational_restore: negative step count");
  ReflectConvolver conv(kernel, y.rows(), y.cols());

  VariationalResult out;
  Image x = y;
  Objective cur = variational_objective(x, y, conv, weights, true);
  if (!std::isfinite(cur.value)) throw NumericError("variational_restore: non-finite objective");
  out.objective.push_back(cur.value);

  double t = step_size;
  for (int it = 0; it < steps; ++it) {
    bool accepted = false;
    for (int halving = 0; halving <= kMaxHalvings; ++halving) {
      const Image trial = x - t * cur.grad;
      const Objective next = variational_objective(trial, y, conv, weights, false);
      if (!std::isfinite(next.value)) throw NumericError("variational_restore: non-finite objective");
      if (next.value <= cur.value) {
        x = trial;
        cur = variational_objective(x, y, conv, weights, true);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
    ++out.accepted_steps;
    out.objective.push_back(cur.value);
  }
  out.image = std::move(x);
  return out;
}

Image median3x3(const Image& img) {
  const Eigen::Index rows = img.rows(), cols = img.cols();
  Image out(rows, cols);
  std::array<double, 9> win{};
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      int k = 0;
      for (Eigen::Index dr = -1; dr <= 1; ++dr) {
        for (Eigen::Index dc = -1; dc <= 1; ++dc) {
          win[k++] = img(mirror_index(r + dr, rows), mirror_index(c + dc, cols));
        }
      }
      std::nth_element(win.begin(), win.begin() + 4, win.end());
      out(r, c) = win[4];
    }
  }
  return out;
}

double estimate_noise_sigma(const Image& img) {
  if (img.rows() < 3 || img.cols() < 3) throw ArgumentError("estimate_noise_sigma: image must be at least 3x3");
  const Image residual = img - median3x3(img);
  std::vector<double> values(residual.data(), residual.data() + residual.size());
  const double med = median(values);
  for (Eigen::Index i = 0; i < residual.size(); ++i) values[i] = std::fabs(residual.data()[i] - med);
  return 1.4826 * median(values);
}

TileGrid plan_tiles(Eigen::Index rows, Eigen::Index cols, const TileSpec& spec) {
  spec.validate();
  if (rows < 1 || cols < 1) throw ArgumentError("plan_tiles: empty image");
  TileGrid g;
  g.pad_top = spec.overlap;
  g.pad_left = spec.overlap;
  g.row_origins = axis_origins(rows, spec, g.pad_bottom);
  g.col_origins = axis_origins(cols, spec, g.pad_right);
  return g;
}

Image tile_coverage(Eigen::Index rows, Eigen::Index cols, const TileSpec& spec) {
  const TileGrid g = plan_tiles(rows, cols, spec);
  Image cover = Image::Zero(rows + g.pad_top + g.pad_bottom, cols + g.pad_left + g.pad_right);
  for (Eigen::Index r0 : g.row_origins) {
    for (Eigen::Index c0 : g.col_origins) cover.block(r0, c0, spec.tile, spec.tile) += 1.0;
  }
  return cover.block(g.pad_top, g.pad_left, rows, cols);
}

Image hann_window(Eigen::Index tile) {
  Eigen::ArrayXd w(tile);
  for (Eigen::Index i = 0; i < tile; ++i) {
    w(i) = tile == 1 ? 1.0
                     : 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(tile - 1));
  }
  Image win = (w.matrix() * w.matrix().transpose()).array();
  return win.cwiseMax(kHannFloor);
}

Image tiled_apply(const Image& img, const TileSpec& spec, const TileOp& op) {
  const TileGrid g = plan_tiles(img.rows(), img.cols(), spec);
  const Image padded = pad_reflect(img, g.pad_top, g.pad_bottom, g.pad_left, g.pad_right);
  const Image window = hann_window(spec.tile);
  Image acc = Image::Zero(padded.rows(), padded.cols());
  Image wsum = Image::Zero(padded.rows(), padded.cols());
  for (Eigen::Index r0 : g.row_origins) {
    for (Eigen::Index c0 : g.col_origins) {
      const Image tile = padded.block(r0, c0, spec.tile, spec.tile);
      const Image result = op(tile);
      if (result.rows() != spec.tile || result.cols() != spec.tile) {
        throw ArgumentError("tiled_apply: operator changed the tile shape");
      }
      acc.block(r0, c0, spec.tile, spec.tile) += window * result;
      wsum.block(r0, c0, spec.tile, spec.tile) += window;
    }
  }
  return (acc / wsum).block(g.pad_top, g.pad_left, img.rows(), img.cols());
}

void to_json(nlohmann::json& j, const RestoreConfig& c) {
  j = nlohmann::json{{"rl_iterations", c.rl_iterations},
                     {"wiener_balance", c.wiener_balance},
                     {"fixed_psf", c.fixed_psf},
                     {"variational_steps", c.variational_steps},
                     {"variational_step_size", c.variational_step_size},
                     {"weights", c.weights}};
}

void from_json(const nlohmann::json& j, RestoreConfig& c) {
  c.rl_iterations = j.value("rl_iterations", c.rl_iterations);
  c.wiener_balance = j.value("wiener_balance", c.wiener_balance);
  if (j.contains("fixed_psf")) j.at("fixed_psf").get_to(c.fixed_psf);
  c.variational_steps = j.value("variational_steps", c.variational_steps);
  c.variational_step_size = j.value("variational_step_size", c.variational_step_size);
  if (j.contains("weights")) j.at("weights").get_to(c.weights);
}

void to_json(nlohmann::json& j, const TileSpec& t) {
  j = nlohmann::json{{"tile", t.tile}, {"overlap", t.overlap}};
}

void from_json(const nlohmann::json& j, TileSpec& t) {
  t.tile = j.value("tile", t.tile);
  t.overlap = j.value("overlap", t.overlap);
}

}  // namespace semkit
