#include "semkit/degrade.hpp"
#include "support.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <set>

using namespace semkit;

namespace {

Kernel box(int n) { return Kernel(Image::Ones(n, n)); }

double inner(const Image& a, const Image& b) { return (a * b).sum(); }

}  // namespace

TEST_CASE("counter RNG streams are keyed and reproducible") {
  CounterRng a(Seed{7, 3, "shot"}), b(Seed{7, 3, "shot"}), c(Seed{7, 4, "shot"}), d(Seed{7, 3, "read"});
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 16; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    differs_c |= x != c.next_u64();
    differs_d |= x != d.next_u64();
  }
  CHECK(differs_c);
  CHECK(differs_d);
}

TEST_CASE("uniform, normal and integer draws have the right moments") {
  CounterRng rng(Seed{11, 0, "moments"});
  const int n = 200000;
  double su = 0, su2 = 0, sn = 0, sn2 = 0;
  std::vector<int> hist(10, 0);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    su += u;
    su2 += u * u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
    const auto k = rng.below(10);
    REQUIRE(k < 10);
    ++hist[k];
  }
  CHECK(std::fabs(su / n - 0.5) < 3 * std::sqrt(1.0 / 12 / n));
  CHECK(std::fabs(su2 / n - su / n * su / n - 1.0 / 12) < 0.002);
  CHECK(std::fabs(sn / n) < 3 / std::sqrt(static_cast<double>(n)));
  CHECK(std::fabs(sn2 / n - 1.0) < 0.01);
  double chi2 = 0;
  for (int h : hist) chi2 += (h - n / 10.0) * (h - n / 10.0) / (n / 10.0);
  CHECK(chi2 < 27.9);  // 9 dof, p ≈ 0.001
}

TEST_CASE("Poisson draws: E[P(z·dose)/dose] = z and Var = z/dose") {
  const int n = 100000;
  for (double mean : {0.3, 4.0, 29.0, 31.0, 250.0, 6375.0}) {
    CounterRng rng(Seed{5, static_cast<std::uint64_t>(mean * 10), "poisson"});
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = static_cast<double>(rng.poisson(mean));
      s += k;
      s2 += k * k;
    }
    const double m = s / n, var = s2 / n - m * m;
    CAPTURE(mean);
    CHECK(std::fabs(m - mean) < 3 * std::sqrt(mean / n));
    CHECK(std::fabs(var / mean - 1.0) < 0.03);
  }
  CounterRng rng(Seed{1, 1, "p"});
  CHECK(rng.poisson(0.0) == 0);
}

TEST_CASE("reflect padding mirrors without repeating the edge") {
  Image x(1, 4);
  x << 0, 1, 2, 3;
  const Image p = pad_reflect(x, 0, 0, 2, 3);
  Image expect(1, 9);
  expect << 2, 1, 0, 1, 2, 3, 2, 1, 0;
  CHECK((p == expect).all());
}

TEST_CASE("convolve_reflect: delta, constants and hand-computed ramp") {
  const Image x = testing::random_image(12, 9, 4);
  CHECK((convolve_reflect(x, Kernel::delta()) == x).all());
  Image centre = Image::Zero(3, 3);
  centre(1, 1) = 1.0;
  CHECK((convolve_reflect(x, Kernel(centre)) - x).abs().maxCoeff() < 1e-15);
  const Kernel airy = build_kernel({2.5, 1.5, 1.95, 0.4});
  CHECK((convolve_reflect(Image::Constant(20, 24, 0.37), airy) - 0.37).abs().maxCoeff() < 1e-12);

  Image ramp(5, 5);
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) ramp(r, c) = 5 * r + c;
  }
  const Image out = convolve_reflect(ramp, box(3));
  CHECK(out(0, 0) == doctest::Approx(4.0).epsilon(1e-14));  // (6+5+6+1+0+1+6+5+6)/9
  CHECK(out(2, 2) == doctest::Approx(12.0).epsilon(1e-14));
  CHECK(out(4, 4) == doctest::Approx(20.0).epsilon(1e-14));  // (18+19+18+23+24+23+18+19+18)/9
  CHECK((out - testing::direct_convolve(ramp, box(3).weights())).abs().maxCoeff() < 1e-12);
}

TEST_CASE("convolve_reflect agrees with the direct sum on both code paths") {
  const Image x = testing::random_image(37, 41, 9);
  for (const PsfParams p : {PsfParams{0.6, 0.6, 2.0, 0.0}, PsfParams{1.0, 1.2, 1.9, 0.5}, PsfParams{2.0, 3.5, 1.95, 2.0},
                            PsfParams{5.0, 2.0, 1.95, 1.2}}) {
    const Kernel k = build_kernel(p);
    CAPTURE(k.size());
    CHECK((convolve_reflect(x, k) - testing::direct_convolve(x, k.weights())).abs().maxCoeff() < 1e-10);
  }
  // Asymmetric kernel catches flipped-vs-unflipped mistakes.
  Image w = testing::random_image(9, 9, 2);
  const Kernel k(w);
  CHECK((convolve_reflect(x, k) - testing::direct_convolve(x, k.weights())).abs().maxCoeff() < 1e-10);
  ReflectConvolver conv(k, x.rows(), x.cols());
  CHECK((conv.correlate(x) - testing::direct_convolve(x, k.flipped().weights())).abs().maxCoeff() < 1e-10);
}

TEST_CASE("adjoint passes the dot-product test") {
  for (int n : {5, 15}) {
    const Kernel k(testing::random_image(n, n, 100 + n));
    ReflectConvolver conv(k, 23, 31);
    const Image x = testing::random_image(23, 31, 1), g = testing::random_image(23, 31, 2);
    const double lhs = inner(conv.convolve(x), g), rhs = inner(x, conv.adjoint(g));
    CHECK(std::fabs(lhs - rhs) < 1e-10 * std::fabs(lhs));
  }
}

TEST_CASE("kernel too large for reflection is rejected") {
  CHECK_THROWS_AS(convolve_reflect(Image::Zero(10, 40), box(21)), ArgumentError);
  CHECK_NOTHROW(convolve_reflect(Image::Zero(10, 40), box(19)));
}

TEST_CASE("noiseless forward model is the affine map of the blur") {
  const Image x = testing::random_image(16, 16, 6, 0.0, 0.5);
  DegradeParams p;
  p.a = 2.0;
  p.b = 25.5;
  p.sigma = 0.0;
  const Image y = apply_forward_model(x, Kernel::delta(), p, Seed{1, 0}, NoiseMode::Noiseless);
  CHECK((y - (2.0 * x + 0.1).cwiseMin(1.0)).abs().maxCoeff() < 1e-12);

  p.a = 1.045;
  p.b = 13.0;
  p.psf = {2.0, 2.0, 1.95, 0.0};
  const Image c = apply_forward_model(Image::Constant(24, 24, 0.4), p, Seed{}, NoiseMode::Noiseless);
  CHECK((c - (1.045 * 0.4 + 13.0 / 255.0)).abs().maxCoeff() < 1e-10);
}

TEST_CASE("forward model is deterministic per seed and stream") {
  const Image x = testing::random_image(32, 40, 8);
  DegradeParams p;
  p.psf = {3.0, 2.0, 1.95, 0.3};
  p.b = 5;
  p.sigma = 4;
  p.dose = 10;
  const Image y1 = apply_forward_model(x, p, Seed{42, 3});
  const Image y2 = apply_forward_model(x, p, Seed{42, 3});
  const Image y3 = apply_forward_model(x, p, Seed{42, 4});
  CHECK((y1 == y2).all());
  CHECK((y1 != y3).any());
  CHECK((y1 >= 0.0).all());
  CHECK((y1 <= 1.0).all());
}

TEST_CASE("Poisson-Gaussian moments on a constant image") {
  DegradeParams p;
  p.sigma = 5.0;
  p.dose = 50.0;
  const Image y = apply_forward_model(Image::Constant(320, 320, 0.5), Kernel::delta(), p, Seed{2024, 0});
  const double n = static_cast<double>(y.size());
  const double mean = y.mean();
  const double var = (y - mean).square().sum() / (n - 1);
  const double expected_var = (127.5 / 50.0 + 25.0) / (255.0 * 255.0);
  CHECK(std::fabs(mean - 0.5) < 3.0 * std::sqrt(expected_var / n));
  CHECK(std::fabs(var / expected_var - 1.0) < 0.05);
}

TEST_CASE("parameter sampling") {
  ParamRanges fixed;
  fixed.r_x = {15.5, 15.5};
  CHECK(sample_params(fixed, Seed{9, 1}).psf.r_x == 15.5);

  const ParamRanges ranges;
  const DegradeParams a = sample_params(ranges, Seed{9, 1}), b = sample_params(ranges, Seed{9, 1});
  CHECK(nlohmann::json(a) == nlohmann::json(b));
  CHECK(nlohmann::json(a) != nlohmann::json(sample_params(ranges, Seed{9, 2})));

  const int n = 10000;
  std::vector<double> sums(8, 0.0);
  for (int i = 0; i < n; ++i) {
    const DegradeParams d = sample_params(ranges, Seed{123, static_cast<std::uint64_t>(i)});
    const double v[8] = {d.psf.r_x, d.psf.r_y, d.psf.beta, d.psf.theta, d.a, d.b, d.sigma, d.dose};
    for (int k = 0; k < 8; ++k) sums[k] += v[k];
  }
  const Range rs[8] = {ranges.r_x, ranges.r_y, ranges.beta, ranges.theta, ranges.a, ranges.b, ranges.sigma, ranges.dose};
  for (int k = 0; k < 8; ++k) {
    const double se = (rs[k].hi - rs[k].lo) / std::sqrt(12.0 * n);
    CAPTURE(k);
    CHECK(std::fabs(sums[k] / n - rs[k].midpoint()) < 3 * se);
  }
}

TEST_CASE("midpoints of the default ranges") {
  const DegradeParams m = midpoint_params(ParamRanges{});
  CHECK(m.psf.r_x == 15.5);
  CHECK(m.psf.r_y == 15.5);
  CHECK(m.psf.beta == doctest::Approx(1.95).epsilon(1e-15));
  CHECK(m.psf.theta == doctest::Approx(1.57).epsilon(1e-15));
  CHECK(m.a == doctest::Approx(1.045).epsilon(1e-15));
  CHECK(m.b == 13.0);
  CHECK(m.sigma == 5.5);
  CHECK(m.dose == 25.5);
}

TEST_CASE("parameter JSON schema") {
  DegradeParams p;
  p.psf = {1.5, 2.5, 1.9, 0.25};
  p.a = 1.01;
  p.b = 3;
  p.sigma = 2;
  p.dose = 7;
  const nlohmann::json j = p;
  std::set<std::string> keys;
  for (const auto& it : j.items()) keys.insert(it.key());
  CHECK(keys == std::set<std::string>{"r_x", "r_y", "beta", "theta", "a", "b", "sigma", "dose"});
  CHECK(nlohmann::json(j.get<DegradeParams>()) == j);

  const nlohmann::json r = ParamRanges{};
  CHECK(r.at("dose") == nlohmann::json::array({1.0, 50.0}));
  ParamRanges back = r.get<ParamRanges>();
  CHECK(back.theta.hi == 3.14);
  CHECK_THROWS(nlohmann::json::parse(R"({"a": [1]})").get<ParamRanges>());
}

TEST_CASE("parameter validation") {
  DegradeParams p;
  p.a = 0.0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  p.a = 1.0;
  p.dose = 0.0;
  CHECK_THROWS_AS(p.validate(), ArgumentError);
  ParamRanges r;
  r.b = {5, 1};
  CHECK_THROWS_AS(r.validate(), ArgumentError);
}
