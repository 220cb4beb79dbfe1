#pragma once

#include "semkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <string>

namespace testing {

using semkit::Image;

/// Bright vertical lines: columns [offset + k·pitch, offset + k·pitch + width) are 1.
inline Image grating(Eigen::Index rows, Eigen::Index cols, int pitch, int width, int offset = 0) {
  Image img = Image::Zero(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const int phase = static_cast<int>(((c - offset) % pitch + pitch) % pitch);
    if (phase < width) img.col(c).setOnes();
  }
  return img;
}

/// Raised-cosine grating 0.5 + 0.4·cos(2π c / period) along columns.
inline Image smooth_grating(Eigen::Index rows, Eigen::Index cols, double period, double phase = 0.0) {
  Image img(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) img(r, c) = 0.5 + 0.4 * std::cos(2.0 * M_PI * c / period + phase);
  }
  return img;
}

/// Line/space pattern with linear edge ramps: lines of half-height width `width`
/// centred at offset + width/2 + k·pitch, intensities lo (space) to hi (line).
inline Image trapezoid_grating(Eigen::Index rows, Eigen::Index cols, double pitch, double width, double ramp,
                               double offset, double lo = 0.1, double hi = 0.9) {
  Image img(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    const double centre = offset + width / 2;
    const double phase = std::fmod(std::fmod(c - centre, pitch) + pitch, pitch);
    const double dist = std::min(phase, pitch - phase);
    const double level = std::clamp(0.5 - (dist - width / 2) / ramp, 0.0, 1.0);
    img.col(c).setConstant(lo + (hi - lo) * level);
  }
  return img;
}

/// Bright vertical lines with prescribed sub-pixel edges: left(l, r) and right(l, r)
/// for line l in image row r. Each edge is a linear ramp `ramp` pixels wide centred on
/// the edge, so linear interpolation at the 0.5 level lands exactly on it.
inline Image ramp_lines(Eigen::Index rows, Eigen::Index cols, const Eigen::MatrixXd& left,
                        const Eigen::MatrixXd& right, double ramp = 4.0) {
  Image img = Image::Zero(rows, cols);
  for (Eigen::Index l = 0; l < left.rows(); ++l) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        const double up = std::clamp(0.5 + (c - left(l, r)) / ramp, 0.0, 1.0);
        const double down = std::clamp(0.5 - (c - right(l, r)) / ramp, 0.0, 1.0);
        img(r, c) = std::max(img(r, c), std::min(up, down));
      }
    }
  }
  return img;
}

inline Image random_image(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Image img(rows, cols);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = u(gen);
  return img;
}

/// Mirror reflection written out case by case, independent of the library helper.
inline Eigen::Index reflect(Eigen::Index i, Eigen::Index n) {
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

/// Textbook same-size convolution with mirrored borders.
inline Image direct_convolve(const Image& img, const Image& k) {
  const Eigen::Index h = k.rows() / 2;
  Image out = Image::Zero(img.rows(), img.cols());
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      double s = 0.0;
      for (Eigen::Index i = -h; i <= h; ++i) {
        for (Eigen::Index j = -h; j <= h; ++j) {
          s += k(i + h, j + h) * img(reflect(r - i, img.rows()), reflect(c - j, img.cols()));
        }
      }
      out(r, c) = s;
    }
  }
  return out;
}

/// O(N²) forward DFT straight from the definition.
inline semkit::ComplexImage brute_dft(const Image& x) {
  const Eigen::Index h = x.rows(), w = x.cols();
  semkit::ComplexImage out(h, w);
  for (Eigen::Index k = 0; k < h; ++k) {
    for (Eigen::Index l = 0; l < w; ++l) {
      std::complex<double> acc = 0.0;
      for (Eigen::Index u = 0; u < h; ++u) {
        for (Eigen::Index v = 0; v < w; ++v) {
          const double ang = -2.0 * M_PI * (static_cast<double>(k * u) / h + static_cast<double>(l * v) / w);
          acc += x(u, v) * std::polar(1.0, ang);
        }
      }
      out(k, l) = acc;
    }
  }
  return out;
}

/// True if any forward difference touching (r, c) is within `tol` of zero.
inline bool near_difference_kink(const Image& d, Eigen::Index r, Eigen::Index c, double tol) {
  const auto small = [&](Eigen::Index r0, Eigen::Index c0, Eigen::Index r1, Eigen::Index c1) {
    if (r0 < 0 || c0 < 0 || r1 >= d.rows() || c1 >= d.cols()) return false;
    return std::fabs(d(r1, c1) - d(r0, c0)) < tol;
  };
  return small(r, c - 1, r, c) || small(r, c, r, c + 1) || small(r - 1, c, r, c) || small(r, c, r + 1, c);
}

struct GradientCheck {
  double max_rel_error = 0.0;
  int checked = 0;
};

/// Compares `grad` with central differences of `loss` (step h) at `samples` random
/// pixels for which `skip(r, c)` is false. The relative error is taken against
/// max(|analytic|, |numeric|, 1e-3·max|grad|) so that pixels with a zero subgradient
/// are judged on the scale of the whole gradient rather than on summation round-off.
template <typename Loss, typename Skip>
GradientCheck check_gradient(const Loss& loss, const Image& x, const Image& grad, int samples, std::uint64_t seed,
                             const Skip& skip, double h = 1e-5) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, x.size() - 1);
  GradientCheck out;
  Image probe = x;
  const double floor = std::max(1e-3 * grad.abs().maxCoeff(), 1e-300);
  for (int attempt = 0; out.checked < samples && attempt < 100 * samples; ++attempt) {
    const Eigen::Index i = pick(gen);
    const Eigen::Index r = i / x.cols(), c = i % x.cols();
    if (skip(r, c)) continue;
    probe(r, c) = x(r, c) + h;
    const double up = loss(probe);
    probe(r, c) = x(r, c) - h;
    const double down = loss(probe);
    probe(r, c) = x(r, c);
    const double numeric = (up - down) / (2.0 * h);
    const double scale = std::max({std::fabs(grad(r, c)), std::fabs(numeric), floor});
    out.max_rel_error = std::max(out.max_rel_error, std::fabs(numeric - grad(r, c)) / scale);
    ++out.checked;
  }
  return out;
}

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("semkit_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Relative path → file contents for every regular file under `root`.
inline std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[e.path().lexically_relative(root).generic_string()] = slurp(e.path());
  }
  return out;
}

}  // namespace testing
