#include "semkit/psf.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>

namespace semkit {

void PsfParams::validate() const {
  if (!(r_x > 0.0) || !(r_y > 0.0)) throw ArgumentError("PSF radii must be positive");
  if (!(beta > 0.0)) throw ArgumentError("PSF exponent beta must be positive");
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) throw ArgumentError("PSF theta must lie in [0, pi]");
}

Kernel::Kernel(Image weights) : weights_(std::move(weights)) {
  if (weights_.rows() != weights_.cols() || weights_.rows() % 2 == 0) {
    throw ArgumentError("kernel must be square with odd size");
  }
  if (!weights_.allFinite() || (weights_ < 0.0).any()) {
    throw ArgumentError("kernel weights must be finite and non-negative");
  }
  const double total = weights_.sum();
  if (!(total > 0.0)) throw NumericError("kernel weights sum to zero");
  weights_ /= total;
}

Kernel Kernel::delta() { return Kernel(Image::Ones(1, 1)); }

Kernel Kernel::flipped() const { return Kernel(weights_.reverse().eval()); }

double bessel_j1(double x) {
  const double ax = std::fabs(x);
  if (ax < 8.0) {
    const double y = x * x;
    const double num =
        x * (72362614232.0 +
             y * (-7895059235.0 +
                  y * (242396853.1 + y * (-2972611.439 + y * (15704.48260 + y * (-30.16036606))))));
    const double den =
        144725228442.0 +
        y * (2300535178.0 + y * (18583304.74 + y * (99447.43394 + y * (376.9991397 + y * 1.0))));
    return num / den;
  }
  const double z = 8.0 / ax;
  const double y = z * z;
  const double xx = ax - 2.356194491;
  const double p = 1.0 + y * (0.183105e-2 + y * (-0.3516396496e-4 + y * (0.2457520174e-5 + y * (-0.240337019e-6))));
  const double q = 0.04687499995 +
                   y * (-0.2002690873e-3 + y * (0.8449199096e-5 + y * (-0.88228987e-6 + y * 0.105787412e-6)));
  const double ans = std::sqrt(0.636619772 / ax) * (std::cos(xx) * p - z * std::sin(xx) * q);
  return x < 0.0 ? -ans : ans;
}

double airy_profile(double r, double beta) {
  if (r < 0.0) throw ArgumentError("airy_profile: negative radius");
  if (r == 0.0) return 1.0;
  const double arg = std::numbers::pi * r;
  // Negative side lobes have no real non-integer power; they are dropped.
  const double base = std::max(0.0, 2.0 * bessel_j1(arg) / arg);
  return std::pow(base, beta);
}

Eigen::Index kernel_size(double r_x, double r_y) {
  if (!(r_x > 0.0) || !(r_y > 0.0)) throw ArgumentError("kernel_size: radii must be positive");
  auto k = static_cast<Eigen::Index>(std::ceil(6.0 * std::max(r_x, r_y)));
  if (k % 2 == 0) ++k;
  return k;
}

Kernel build_kernel(const PsfParams& params) {
  params.validate();
  return build_kernel(params, kernel_size(params.r_x, params.r_y));
}

Kernel build_kernel(const PsfParams& params, Eigen::Index size) {
  params.validate();
  if (size < 1 || size % 2 == 0) throw ArgumentError("kernel size must be odd and positive");
  const Eigen::Index c = size / 2;
  const double ct = std::cos(params.theta);
  const double st = std::sin(params.theta);
  Image grid(size, size);
  for (Eigen::Index row = 0; row < size; ++row) {
    const double y = static_cast<double>(row - c);
    for (Eigen::Index col = 0; col < size; ++col) {
      const double x = static_cast<double>(col - c);
      const double xr = x * ct + y * st;
      const double yr = -x * st + y * ct;
      const double r = std::hypot(xr / params.r_x, yr / params.r_y);
      grid(row, col) = airy_profile(r, params.beta);
    }
  }
  return Kernel(std::move(grid));
}

void to_json(nlohmann::json& j, const PsfParams& p) {
  j = nlohmann::json{{"r_x", p.r_x}, {"r_y", p.r_y}, {"beta", p.beta}, {"theta", p.theta}};
}

void from_json(const nlohmann::json& j, PsfParams& p) {
  p.r_x = j.value("r_x", p.r_x);
  p.r_y = j.value("r_y", p.r_y);
  p.beta = j.value("beta", p.beta);
  p.theta = j.value("theta", p.theta);
}

void to_json(nlohmann::json& j, const Kernel& k) {
  const Image& w = k.weights();
  j = nlohmann::json{{"size", k.size()},
                     {"weights", std::vector<double>(w.data(), w.data() + w.size())}};
}

Kernel kernel_from_json(const nlohmann::json& j) {
  const auto size = j.at("size").get<Eigen::Index>();
  const auto values = j.at("weights").get<std::vector<double>>();
  if (size < 1 || static_cast<Eigen::Index>(values.size()) != size * size) {
    throw FormatError("kernel JSON: weights length does not match size");
  }
  Image w = Eigen::Map<const Image>(values.data(), size, size);
  return Kernel(std::move(w));
}

}  // namespace semkit
