#pragma once

#include "semkit/core.hpp"

#include <nlohmann/json_fwd.hpp>

namespace semkit {

/// Elliptical, rotated Airy PSF. Radii in pixels, theta in radians.
struct PsfParams {
  double r_x = 15.5;
  double r_y = 15.5;
  double beta = 1.95;
  double theta = 0.0;

  void validate() const;
};

/// Odd-sized, non-negative, unit-sum convolution kernel.
class Kernel {
 public:
  /// Normalises `weights` to unit sum. Throws if the grid is not square and odd,
  /// has negative entries or sums to zero.
  explicit Kernel(Image weights);

  /// 1×1 identity kernel.
  static Kernel delta();

  Eigen::Index size() const { return weights_.rows(); }
  Eigen::Index half() const { return weights_.rows() / 2; }
  const Image& weights() const { return weights_; }

  /// Kernel rotated by 180 degrees.
  Kernel flipped() const;

 private:
  Image weights_;
};

/// First-order Bessel function of the first kind.
///
/// Rational approximation on |x| < 8 and a two-term Hankel asymptotic form with
/// rational corrections beyond, in the classic Hart-style coefficient set.
/// Maximum absolute error is below 1e-8 on |x| <= 200. Odd symmetry is exact.
double bessel_j1(double x);

/// [2 J1(πr) / (πr)]^beta, with the base clamped at zero before exponentiation and
/// the removable singularity at r = 0 evaluated as 1.
double airy_profile(double r, double beta);

/// ceil(6 · max(r_x, r_y)), bumped to the next odd integer if even.
Eigen::Index kernel_size(double r_x, double r_y);

Kernel build_kernel(const PsfParams& params);

/// Same construction as build_kernel but on a caller-chosen odd grid size.
Kernel build_kernel(const PsfParams& params, Eigen::Index size);

void to_json(nlohmann::json& j, const PsfParams& p);
void from_json(const nlohmann::json& j, PsfParams& p);
void to_json(nlohmann::json& j, const Kernel& k);
Kernel kernel_from_json(const nlohmann::json& j);

}  // namespace semkit
