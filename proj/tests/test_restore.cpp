#include "semkit/metrics.hpp"
#include "semkit/restore.hpp"
#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace semkit;

namespace {

const Kernel& midpoint_kernel() {
  static const Kernel k = build_kernel({15.5, 15.5, 1.95, 0.0});
  return k;
}

Image gaussian_noise(Eigen::Index rows, Eigen::Index cols, double sigma, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, sigma);
  Image img(rows, cols);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = n(gen);
  return img;
}

double brute_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("restore config defaults follow the fixed baselines") {
  const RestoreConfig c;
  CHECK(c.rl_iterations == 30);
  CHECK(c.wiener_balance == 0.01);
  CHECK(c.fixed_psf.r_x == 15.5);
  CHECK(c.fixed_psf.r_y == 15.5);
  CHECK(c.fixed_psf.beta == 1.95);
  CHECK(c.fixed_psf.theta == 0.0);
  const TileSpec t;
  CHECK(t.tile == 224);
  CHECK(t.overlap == 8);

  RestoreConfig bad;
  bad.rl_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = RestoreConfig{};
  bad.wiener_balance = 0.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  CHECK_THROWS_AS((TileSpec{16, 16}.validate()), ArgumentError);
  CHECK_THROWS_AS((TileSpec{16, 0}.validate()), ArgumentError);
}

TEST_CASE("RL: delta kernel and constant images are fixed points") {
  const Image y = testing::random_image(40, 36, 3, 0.05, 1.0);
  CHECK((richardson_lucy(y, Kernel::delta(), 7) - y).abs().maxCoeff() < 1e-10);

  const Image flat = Image::Constant(64, 64, 0.37);
  CHECK((richardson_lucy(flat, midpoint_kernel(), 30) - flat).abs().maxCoeff() < 1e-10);
}

TEST_CASE("RL rejects negative data and keeps iterates non-negative") {
  Image y = testing::random_image(32, 32, 5);
  y(4, 4) = -0.01;
  CHECK_THROWS_AS(richardson_lucy(y, Kernel::delta(), 1), ArgumentError);
  CHECK_THROWS_AS(richardson_lucy(testing::random_image(8, 8, 1), Kernel::delta(), 0), ArgumentError);

  const Kernel k = build_kernel({2.0, 3.0, 1.95, 0.4});
  const Image x = richardson_lucy(convolve_reflect(testing::random_image(48, 48, 6), k), k, 15);
  CHECK(x.minCoeff() >= 0.0);
}

TEST_CASE("RL preserves flux on an interior-dominated image") {
  Image x = Image::Constant(128, 128, 0.02);
  x.block(40, 50, 40, 30) = 0.8;
  const Kernel k = build_kernel({3.0, 3.0, 1.95, 0.0});
  const Image y = convolve_reflect(x, k);
  const Image r = richardson_lucy(y, k, 30);
  CHECK(std::fabs(r.sum() - y.sum()) / y.sum() < 1e-3);
}

TEST_CASE("RL sharpens a blurred grating") {
  const Image x = testing::trapezoid_grating(256, 256, 96, 48, 8, 7);
  const Image y = convolve_reflect(x, midpoint_kernel());
  CHECK(ssim(richardson_lucy(y, midpoint_kernel(), 30), x) > ssim(y, x));
}

TEST_CASE("Wiener with a delta kernel is y/(1+λ)") {
  for (Eigen::Index n : {37, 64, 224}) {
    const Image y = testing::random_image(n, n + 3, static_cast<std::uint64_t>(n));
    for (double lambda : {0.01, 1.0, 1e6}) {
      CHECK((wiener(y, Kernel::delta(), lambda) - y / (1.0 + lambda)).abs().maxCoeff() < 1e-10);
    }
  }
  CHECK_THROWS_AS(wiener(Image::Ones(8, 8), Kernel::delta(), 0.0), ArgumentError);
}

TEST_CASE("Wiener is linear") {
  const Kernel k = build_kernel({4.0, 2.5, 1.9, 1.0});
  const Image a = testing::random_image(50, 61, 8);
  const Image b = testing::random_image(50, 61, 9);
  const Image lhs = wiener(0.3 * a - 1.7 * b, k, 0.01);
  const Image rhs = 0.3 * wiener(a, k, 0.01) - 1.7 * wiener(b, k, 0.01);
  CHECK((lhs - rhs).abs().maxCoeff() < 1e-10);
}

TEST_CASE("Wiener nearly inverts a noiseless blur at tiny balance") {
  for (double period : {48.0, 96.0}) {
    const Image x = testing::smooth_grating(256, 256, period, 0.3);
    const Image y = convolve_reflect(x, midpoint_kernel());
    CHECK(psnr(wiener(y, midpoint_kernel(), 1e-6), x) >= 40.0);
  }
}

TEST_CASE("Wiener at tile size stays well conditioned") {
  // 2(224-1) has a large prime factor, so this exercises the alternative extension.
  const Image x = testing::smooth_grating(224, 224, 64, 0.3);
  const Image y = convolve_reflect(x, midpoint_kernel());
  CHECK(psnr(wiener(y, midpoint_kernel(), 1e-2), x) > psnr(y, x));
  CHECK(ssim(wiener(y, midpoint_kernel(), 1e-3), x) > ssim(y, x));
}

TEST_CASE("variational: sharp input with delta kernel stays put") {
  LossWeights w;
  w.lambda_tv = 0.0;
  const Image y = testing::random_image(24, 24, 10);
  const VariationalResult r = variational_restore(y, Kernel::delta(), w, 20, 1e-3);
  CHECK((r.image - y).abs().maxCoeff() < 1e-6);
}

TEST_CASE("variational objective trace never increases") {
  const Kernel k = build_kernel({2.0, 2.0, 1.95, 0.0});
  const Image y = convolve_reflect(testing::random_image(40, 40, 12), k);
  const VariationalResult r = variational_restore(y, k, LossWeights{}, 50, 1e-2);
  REQUIRE(r.objective.size() == static_cast<std::size_t>(r.accepted_steps) + 1);
  for (std::size_t i = 1; i < r.objective.size(); ++i) CHECK(r.objective[i] <= r.objective[i - 1]);
  CHECK(r.objective.back() < r.objective.front());
}

TEST_CASE("variational restore improves SSIM on a blurred grating") {
  const Kernel k = build_kernel({3.0, 3.0, 1.95, 0.0});
  const Image x = testing::trapezoid_grating(64, 64, 24, 12, 2, 3);
  const Image y = convolve_reflect(x, k);
  LossWeights w;
  w.lambda_tv = 1.0;
  const VariationalResult r = variational_restore(y, k, w, 200, 1e-3);
  CHECK(r.accepted_steps == 200);
  CHECK(ssim(r.image, x) > ssim(y, x));
}

TEST_CASE("variational restore stops when x = y admits no descent") {
  // With the default weights the edge term's kink at K∗x = y outweighs the TV slope.
  const Kernel k = build_kernel({3.0, 3.0, 1.95, 0.0});
  const Image y = convolve_reflect(testing::trapezoid_grating(64, 64, 24, 12, 2, 3), k);
  const VariationalResult r = variational_restore(y, k, LossWeights{}, 10, 1e-3);
  CHECK(r.accepted_steps == 0);
  CHECK(r.objective.size() == 1);
  CHECK((r.image - y).abs().maxCoeff() == 0.0);
}

TEST_CASE("variational restore reports non-finite objectives") {
  Image y = Image::Ones(16, 16);
  y(3, 3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(variational_restore(y, Kernel::delta(), LossWeights{}, 5, 1e-3), NumericError);
}

TEST_CASE("median3x3 matches a brute-force mirrored median") {
  const Image img = testing::random_image(9, 13, 14);
  const Image med = median3x3(img);
  for (Eigen::Index r = 0; r < img.rows(); ++r) {
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      std::vector<double> v;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          v.push_back(img(testing::reflect(r + dr, img.rows()), testing::reflect(c + dc, img.cols())));
        }
      }
      CHECK(med(r, c) == brute_median(v));
    }
  }
}

TEST_CASE("MAD noise estimate") {
  CHECK(estimate_noise_sigma(Image::Constant(32, 32, 0.4)) == 0.0);

  Image ramp(256, 256);
  for (Eigen::Index r = 0; r < 256; ++r) {
    for (Eigen::Index c = 0; c < 256; ++c) ramp(r, c) = 0.2 + 0.6 * (r + c) / 510.0;
  }
  const double sigma = estimate_noise_sigma(ramp + gaussian_noise(256, 256, 0.05, 77));
  CHECK(std::fabs(sigma - 0.05) < 0.2 * 0.05);

  Image step = Image::Constant(64, 64, 0.1);
  step.rightCols(32) = 0.9;
  CHECK(estimate_noise_sigma(step) < 0.005);

  CHECK_THROWS_AS(estimate_noise_sigma(Image::Ones(2, 8)), ArgumentError);
}

TEST_CASE("Hann window is separable and floored") {
  const Image w = hann_window(16);
  CHECK(w.minCoeff() == doctest::Approx(1e-3));
  CHECK(w.maxCoeff() <= 1.0);
  CHECK(w(0, 0) == 1e-3);
  for (Eigen::Index i = 0; i < 16; ++i) CHECK(w(i, 3) == doctest::Approx(w(3, i)));
}

TEST_CASE("tile plan covers the image with exact stride closure") {
  const TileSpec spec;
  const TileGrid g = plan_tiles(500, 500, spec);
  CHECK(g.pad_top >= spec.overlap);
  CHECK(g.pad_bottom >= spec.overlap);
  CHECK(g.row_origins.size() == 3);
  CHECK(g.row_origins.back() + spec.tile == 500 + g.pad_top + g.pad_bottom);
  for (std::size_t i = 1; i < g.row_origins.size(); ++i) CHECK(g.row_origins[i] - g.row_origins[i - 1] == 216);
  CHECK(tile_coverage(500, 500, spec).minCoeff() >= 1.0);
  CHECK(tile_coverage(7, 300, TileSpec{32, 4}).minCoeff() >= 1.0);
}

TEST_CASE("tiled_apply: identity and shifts are exact") {
  const TileSpec spec;
  for (auto [rows, cols] : std::vector<std::pair<Eigen::Index, Eigen::Index>>{{224, 224}, {500, 500}, {97, 301}}) {
    const Image x = testing::random_image(rows, cols, static_cast<std::uint64_t>(rows * cols));
    CHECK((tiled_apply(x, spec, [](const Image& t) { return t; }) - x).abs().maxCoeff() < 1e-12);
    CHECK((tiled_apply(x, spec, [](const Image& t) { return Image(t + 0.1); }) - (x + 0.1)).abs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("tiled_apply commutes with pixelwise operators") {
  const Image x = testing::random_image(150, 170, 21);
  const auto op = [](const Image& t) { return Image(t.square() * 0.5 + t.sin()); };
  const Image tiled = tiled_apply(x, TileSpec{64, 8}, op);
  CHECK((tiled - op(x)).abs().maxCoeff() < 1e-12);
}

TEST_CASE("tiled_apply rejects shape-changing operators") {
  const Image x = testing::random_image(40, 40, 1);
  CHECK_THROWS_AS(tiled_apply(x, TileSpec{32, 4}, [](const Image& t) { return Image(t.topRows(4)); }),
                  ArgumentError);
}

TEST_CASE("restore and tile settings round-trip through JSON") {
  RestoreConfig c;
  c.rl_iterations = 12;
  c.wiener_balance = 0.25;
  c.fixed_psf = {3.0, 4.0, 1.9, 0.5};
  c.weights.lambda_tv = 0.5;
  const RestoreConfig back = nlohmann::json(c).get<RestoreConfig>();
  CHECK(back.rl_iterations == 12);
  CHECK(back.wiener_balance == 0.25);
  CHECK(back.fixed_psf.r_y == 4.0);
  CHECK(back.fixed_psf.theta == 0.5);
  CHECK(back.weights.lambda_tv == 0.5);
  CHECK(nlohmann::json(back) == nlohmann::json(c));

  const TileSpec t = nlohmann::json(TileSpec{128, 16}).get<TileSpec>();
  CHECK(t.tile == 128);
  CHECK(t.overlap == 16);
}
