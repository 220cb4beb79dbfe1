#include "semkit/degrade.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace semkit {
namespace {

constexpr Eigen::Index kDirectMaxKernel = 7;
constexpr double kCodeScale = 255.0;

void check_range(const Range& r, const char* name) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi) {
    throw ArgumentError(std::string("invalid range for ") + name);
  }
}

// Writes the reflect-padded image into the top-left (H+top+…)×(W+left+…) corner of
// `out`, whose extent sets the bottom/right margins.
void fill_reflect(const Image& img, Eigen::Index top, Eigen::Index left, Image& out, Eigen::Index out_rows,
                  Eigen::Index out_cols) {
  const Eigen::Index rows = img.rows(), cols = img.cols();
  for (Eigen::Index r = 0; r < out_rows; ++r) {
    const auto src = img.row(mirror_index(r - top, rows));
    out.row(r).segment(left, cols) = src;
    for (Eigen::Index c = 0; c < left; ++c) out(r, c) = src(mirror_index(c - left, cols));
    for (Eigen::Index c = left + cols; c < out_cols; ++c) out(r, c) = src(mirror_index(c - left, cols));
  }
}

void fill_reflect(const Image& img, Eigen::Index top, Eigen::Index left, Image& out) {
  fill_reflect(img, top, left, out, out.rows(), out.cols());
}

// Places the kernel with its centre at (0,0) of an nr×nc periodic grid.
RealSpectrum kernel_spectrum(const Image& w, RealFft2& fft) {
  const Eigen::Index h = w.rows() / 2;
  Image grid = Image::Zero(fft.rows(), fft.cols());
  for (Eigen::Index a = 0; a < w.rows(); ++a) {
    const Eigen::Index r = (a - h + fft.rows()) % fft.rows();
    for (Eigen::Index b = 0; b < w.cols(); ++b) {
      const Eigen::Index c = (b - h + fft.cols()) % fft.cols();
      grid(r, c) += w(a, b);
    }
  }
  return fft.forward(grid);
}

}  // namespace

void DegradeParams::validate() const {
  psf.validate();
  if (!(a > 0.0)) throw ArgumentError("gain a must be positive");
  if (!(b >= 0.0)) throw ArgumentError("offset b must be non-negative");
  if (!(sigma >= 0.0)) throw ArgumentError("sigma must be non-negative");
  if (!(dose > 0.0)) throw ArgumentError("dose must be positive");
}

void ParamRanges::validate() const {
  check_range(r_x, "r_x");
  check_range(r_y, "r_y");
  check_range(beta, "beta");
  check_range(theta, "theta");
  check_range(a, "a");
  check_range(b, "b");
  check_range(sigma, "sigma");
  check_range(dose, "dose");
}

Image pad_reflect(const Image& img, Eigen::Index top, Eigen::Index bottom, Eigen::Index left,
                  Eigen::Index right) {
  Image out(img.rows() + top + bottom, img.cols() + left + right);
  fill_reflect(img, top, left, out);
  return out;
}

ReflectConvolver::ReflectConvolver(const Kernel& kernel, Eigen::Index rows, Eigen::Index cols)
    : kernel_(kernel), rows_(rows), cols_(cols), half_(kernel.half()) {
  if (rows < 1 || cols < 1) throw ArgumentError("convolution: empty image");
  if (kernel.size() >= 2 * std::min(rows, cols)) {
    throw ArgumentError("convolution: kernel of size " + std::to_string(kernel.size()) +
                        " too large for " + std::to_string(rows) + "x" + std::to_string(cols) + " image");
  }
  use_fft_ = kernel.size() > kDirectMaxKernel;
  if (use_fft_) {
    fft_.emplace(next_fast_size(rows + 2 * half_), next_fast_size(cols + 2 * half_));
    kspec_ = kernel_spectrum(kernel.weights(), *fft_);
    kspec_flipped_ = kernel_spectrum(kernel.weights().reverse().eval(), *fft_);
    grid_ = Image::Zero(fft_->rows(), fft_->cols());
  }
}

void ReflectConvolver::check_shape(const Image& x) const {
  if (x.rows() != rows_ || x.cols() != cols_) throw ArgumentError("convolution: image shape changed");
}

Image ReflectConvolver::direct(const Image& x, const Image& w) const {
  const Eigen::Index k = w.rows();
  Image out = Image::Zero(rows_, cols_);
  for (Eigen::Index i = 0; i < rows_; ++i) {
    for (Eigen::Index j = 0; j < cols_; ++j) {
      double acc = 0.0;
      for (Eigen::Index a = 0; a < k; ++a) {
        const Eigen::Index si = mirror_index(i + half_ - a, rows_);
        for (Eigen::Index b = 0; b < k; ++b) {
          acc += w(a, b) * x(si, mirror_index(j + half_ - b, cols_));
        }
      }
      out(i, j) = acc;
    }
  }
  return out;
}

Image ReflectConvolver::filter_grid(const RealSpectrum& kspec) {
  RealSpectrum spec = fft_->forward(grid_);
  spec *= kspec;
  return fft_->inverse(spec);
}

Image ReflectConvolver::convolve(const Image& x) {
  check_shape(x);
  if (!use_fft_) return direct(x, kernel_.weights());
  // The area of grid_ beyond the padded image is never written, so it stays zero.
  fill_reflect(x, half_, half_, grid_, rows_ + 2 * half_, cols_ + 2 * half_);
  return filter_grid(kspec_).block(half_, half_, rows_, cols_);
}

Image ReflectConvolver::correlate(const Image& x) {
  check_shape(x);
  if (!use_fft_) return direct(x, kernel_.weights().reverse().eval());
  fill_reflect(x, half_, half_, grid_, rows_ + 2 * half_, cols_ + 2 * half_);
  return filter_grid(kspec_flipped_).block(half_, half_, rows_, cols_);
}

Image ReflectConvolver::adjoint(const Image& g) {
  check_shape(g);
  const Eigen::Index pr = rows_ + 2 * half_, pc = cols_ + 2 * half_;
  Image padded_adj;
  if (use_fft_) {
    grid_.topLeftCorner(pr, pc).setZero();
    grid_.block(half_, half_, rows_, cols_) = g;
    padded_adj = filter_grid(kspec_flipped_).topLeftCorner(pr, pc);
  } else {
    const Image& w = kernel_.weights();
    padded_adj = Image::Zero(pr, pc);
    for (Eigen::Index i = 0; i < rows_; ++i) {
      for (Eigen::Index j = 0; j < cols_; ++j) {
        for (Eigen::Index a = 0; a < w.rows(); ++a) {
          for (Eigen::Index b = 0; b < w.cols(); ++b) {
            padded_adj(i + 2 * half_ - a, j + 2 * half_ - b) += w(a, b) * g(i, j);
          }
        }
      }
    }
  }
  Image out = Image::Zero(rows_, cols_);
  for (Eigen::Index q = 0; q < pr; ++q) {
    const Eigen::Index r = mirror_index(q - half_, rows_);
    for (Eigen::Index p = 0; p < pc; ++p) {
      out(r, mirror_index(p - half_, cols_)) += padded_adj(q, p);
    }
  }
  return out;
}

Image convolve_reflect(const Image& img, const Kernel& kernel) {
  ReflectConvolver conv(kernel, img.rows(), img.cols());
  return conv.convolve(img);
}

Image apply_forward_model(const Image& img, const Kernel& kernel, const DegradeParams& params,
                          const Seed& seed, NoiseMode mode) {
  params.validate();
  Image z = params.a * convolve_reflect(img * kCodeScale, kernel) + params.b;
  if (mode == NoiseMode::PoissonGaussian) {
    CounterRng shot(Seed{seed.seed, seed.index, "shot"});
    CounterRng read(Seed{seed.seed, seed.index, "read"});
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const double mean = std::max(0.0, z.data()[i]) * params.dose;
      const double counts = static_cast<double>(shot.poisson(mean));
      z.data()[i] = counts / params.dose + params.sigma * read.normal();
    }
  }
  return (z / kCodeScale).cwiseMax(0.0).cwiseMin(1.0);
}

Image apply_forward_model(const Image& img, const DegradeParams& params, const Seed& seed, NoiseMode mode) {
  return apply_forward_model(img, build_kernel(params.psf), params, seed, mode);
}

DegradeParams sample_params(const ParamRanges& ranges, const Seed& seed) {
  ranges.validate();
  CounterRng rng(seed);
  auto draw = [&rng](const Range& r) { return r.lo + (r.hi - r.lo) * rng.uniform(); };
  DegradeParams p;
  p.psf.r_x = draw(ranges.r_x);
  p.psf.r_y = draw(ranges.r_y);
  p.psf.beta = draw(ranges.beta);
  p.psf.theta = draw(ranges.theta);
  p.a = draw(ranges.a);
  p.b = draw(ranges.b);
  p.sigma = draw(ranges.sigma);
  p.dose = draw(ranges.dose);
  return p;
}

DegradeParams midpoint_params(const ParamRanges& ranges) {
  ranges.validate();
  DegradeParams p;
  p.psf.r_x = ranges.r_x.midpoint();
  p.psf.r_y = ranges.r_y.midpoint();
  p.psf.beta = ranges.beta.midpoint();
  p.psf.theta = ranges.theta.midpoint();
  p.a = ranges.a.midpoint();
  p.b = ranges.b.midpoint();
  p.sigma = ranges.sigma.midpoint();
  p.dose = ranges.dose.midpoint();
  return p;
}

void to_json(nlohmann::json& j, const DegradeParams& p) {
  j = nlohmann::json{{"r_x", p.psf.r_x}, {"r_y", p.psf.r_y}, {"beta", p.psf.beta}, {"theta", p.psf.theta},
                     {"a", p.a},         {"b", p.b},         {"sigma", p.sigma},   {"dose", p.dose}};
}

void from_json(const nlohmann::json& j, DegradeParams& p) {
  p.psf.r_x = j.at("r_x").get<double>();
  p.psf.r_y = j.at("r_y").get<double>();
  p.psf.beta = j.at("beta").get<double>();
  p.psf.theta = j.at("theta").get<double>();
  p.a = j.at("a").get<double>();
  p.b = j.at("b").get<double>();
  p.sigma = j.at("sigma").get<double>();
  p.dose = j.at("dose").get<double>();
}

namespace {

nlohmann::json range_json(const Range& r) { return nlohmann::json::array({r.lo, r.hi}); }

void read_range(const nlohmann::json& j, const char* key, Range& r) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw FormatError(std::string("range '") + key + "' must be [lo, hi]");
  r.lo = v[0].get<double>();
  r.hi = v[1].get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const ParamRanges& r) {
  j = nlohmann::json{{"r_x", range_json(r.r_x)},     {"r_y", range_json(r.r_y)}, {"beta", range_json(r.beta)},
                     {"theta", range_json(r.theta)}, {"a", range_json(r.a)},     {"b", range_json(r.b)},
                     {"sigma", range_json(r.sigma)}, {"dose", range_json(r.dose)}};
}

void from_json(const nlohmann::json& j, ParamRanges& r) {
  read_range(j, "r_x", r.r_x);
  read_range(j, "r_y", r.r_y);
  read_range(j, "beta", r.beta);
  read_range(j, "theta", r.theta);
  read_range(j, "a", r.a);
  read_range(j, "b", r.b);
  read_range(j, "sigma", r.sigma);
  read_range(j, "dose", r.dose);
}

}  // namespace semkit
