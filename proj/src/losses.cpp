#include "semkit/losses.hpp"

#include "semkit/fft.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace semkit {
namespace {

inline double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

void check_mask(const Image& pred, const Image& target, const Image& mask, const char* what) {
  require_same_shape(pred, target, what);
  require_same_shape(pred, mask, what);
}

}  // namespace

void LossWeights::validate() const {
  for (double v : {lambda_kd, mu_lb, eta_psd, nu_freq, lambda_e, lambda_tv}) {
    if (!(v >= 0.0)) throw ArgumentError("loss weights must be non-negative");
  }
  if (!(epsilon > 0.0)) throw ArgumentError("Charbonnier epsilon must be positive");
}

Image MaskSpec::pixel_mask() const {
  Image m = Image::Zero(rows, cols);
  const Eigen::Index gc = grid_cols();
  for (Eigen::Index p : masked_patches) {
    m.block((p / gc) * patch_size, (p % gc) * patch_size, patch_size, patch_size).setOnes();
  }
  return m;
}

MaskSpec MaskSpec::from_patches(Eigen::Index rows, Eigen::Index cols, Eigen::Index patch_size,
                                std::vector<Eigen::Index> patches) {
  if (patch_size < 1 || rows < 1 || cols < 1 || rows % patch_size != 0 || cols % patch_size != 0) {
    throw ArgumentError("mask: image dimensions must be positive multiples of the patch size");
  }
  MaskSpec m;
  m.rows = rows;
  m.cols = cols;
  m.patch_size = patch_size;
  std::sort(patches.begin(), patches.end());
  patches.erase(std::unique(patches.begin(), patches.end()), patches.end());
  for (Eigen::Index p : patches) {
    if (p < 0 || p >= m.patch_count()) throw ArgumentError("mask: patch index out of range");
  }
  m.masked_patches = std::move(patches);
  m.ratio = static_cast<double>(m.masked_patches.size()) / static_cast<double>(m.patch_count());
  return m;
}

MaskSpec sample_mask(Eigen::Index rows, Eigen::Index cols, Eigen::Index patch_size, double ratio,
                     const Seed& seed) {
  if (patch_size < 1 || rows < 1 || cols < 1 || rows % patch_size != 0 || cols % patch_size != 0) {
    throw ArgumentError("mask: image dimensions must be positive multiples of the patch size");
  }
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("mask: ratio must lie in (0,1)");
  const Eigen::Index total = (rows / patch_size) * (cols / patch_size);
  const auto count = static_cast<Eigen::Index>(std::lround(ratio * static_cast<double>(total)));
  if (count < 1 || count > total - 1) {
    throw ArgumentError("mask: ratio leaves no masked or no visible patch");
  }
  // Partial Fisher–Yates over the patch indices.
  std::vector<Eigen::Index> idx(total);
  std::iota(idx.begin(), idx.end(), 0);
  CounterRng rng(seed);
  for (Eigen::Index i = 0; i < count; ++i) {
    const auto j = i + static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(total - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  MaskSpec m = MaskSpec::from_patches(rows, cols, patch_size, std::move(idx));
  m.ratio = ratio;
  return m;
}

LossValue masked_l1(const Image& pred, const Image& target, const Image& mask) {
  check_mask(pred, target, mask, "masked_l1");
  const double norm = mask.abs().sum();
  if (!(norm > 0.0)) throw ArgumentError("masked_l1: empty mask");
  const Image diff = pred - target;
  LossValue out;
  out.value = (mask * diff.abs()).sum() / norm;
  out.grad = mask * diff.unaryExpr([](double d) { return sign(d); }) / norm;
  return out;
}

LossValue masked_l1(const Image& pred, const Image& target, const MaskSpec& mask) {
  return masked_l1(pred, target, mask.pixel_mask());
}

LossValue kd_loss(const Image& student, const Image& teacher, const MaskSpec& mask) {
  return masked_l1(student, teacher, mask);
}

LossValue charbonnier(const Image& pred, const Image& target, double eps) {
  require_same_shape(pred, target, "charbonnier");
  if (!(eps > 0.0)) throw ArgumentError("charbonnier: eps must be positive");
  const Image diff = pred - target;
  const Image root = (diff.square() + eps * eps).sqrt();
  return {root.sum(), diff / root};
}

LossValue edge_loss(const Image& pred, const Image& target) {
  require_same_shape(pred, target, "edge_loss");
  const Eigen::Index rows = pred.rows(), cols = pred.cols();
  if (rows * cols < 2) throw ArgumentError("edge_loss: image needs at least two pixels");
  LossValue out{0.0, Image::Zero(rows, cols)};
  if (cols > 1) {
    const Image d = (pred.rightCols(cols - 1) - pred.leftCols(cols - 1)) -
                    (target.rightCols(cols - 1) - target.leftCols(cols - 1));
    out.value += d.abs().sum();
    const Image s = d.unaryExpr([](double v) { return sign(v); });
    out.grad.rightCols(cols - 1) += s;
    out.grad.leftCols(cols - 1) -= s;
  }
  if (rows > 1) {
    const Image d = (pred.bottomRows(rows - 1) - pred.topRows(rows - 1)) -
                    (target.bottomRows(rows - 1) - target.topRows(rows - 1));
    out.value += d.abs().sum();
    const Image s = d.unaryExpr([](double v) { return sign(v); });
    out.grad.bottomRows(rows - 1) += s;
    out.grad.topRows(rows - 1) -= s;
  }
  return out;
}

LossValue tv_loss(const Image& pred) {
  const Eigen::Index rows = pred.rows(), cols = pred.cols();
  LossValue out{0.0, Image::Zero(rows, cols)};
  if (cols > 1) {
    const Image d = pred.rightCols(cols - 1) - pred.leftCols(cols - 1);
    out.value += d.abs().sum();
    const Image s = d.unaryExpr([](double v) { return sign(v); });
    out.grad.rightCols(cols - 1) += s;
    out.grad.leftCols(cols - 1) -= s;
  }
  if (rows > 1) {
    const Image d = pred.bottomRows(rows - 1) - pred.topRows(rows - 1);
    out.value += d.abs().sum();
    const Image s = d.unaryExpr([](double v) { return sign(v); });
    out.grad.bottomRows(rows - 1) += s;
    out.grad.topRows(rows - 1) -= s;
  }
  return out;
}

ComplexImage masked_error_spectrum(const Image& pred, const Image& target, const Image& mask) {
  check_mask(pred, target, mask, "masked_error_spectrum");
  return fft2(mask * (pred - target));
}

double fft_loss(const Image& pred, const Image& target, const Image& mask) {
  const ComplexImage spec = masked_error_spectrum(pred, target, mask);
  return spec.abs().sum() / static_cast<double>(pred.size());
}

double fft_loss(const Image& pred, const Image& target, const MaskSpec& mask) {
  return fft_loss(pred, target, mask.pixel_mask());
}

RadialPsd radial_psd(const Image& img, int num_rings) {
  if (num_rings < 1) throw ArgumentError("radial_psd: need at least one ring");
  if (img.size() == 0) throw ArgumentError("radial_psd: empty image");
  const Eigen::Index rows = img.rows(), cols = img.cols();
  const ComplexImage spec = fft2(img);
  auto centered = [](Eigen::Index k, Eigen::Index n) { return k <= n / 2 ? k : k - n; };
  const double rho_max = std::hypot(static_cast<double>(rows / 2) / static_cast<double>(rows),
                                    static_cast<double>(cols / 2) / static_cast<double>(cols));
  RadialPsd out;
  out.power.assign(num_rings, 0.0);
  out.count.assign(num_rings, 0);
  for (Eigen::Index u = 0; u < rows; ++u) {
    const double fu = static_cast<double>(centered(u, rows)) / static_cast<double>(rows);
    for (Eigen::Index v = 0; v < cols; ++v) {
      const double fv = static_cast<double>(centered(v, cols)) / static_cast<double>(cols);
      const double rho = std::hypot(fu, fv);
      int ring = rho_max > 0.0 ? static_cast<int>(std::floor(rho / rho_max * num_rings)) : 0;
      ring = std::clamp(ring, 0, num_rings - 1);
      out.power[ring] += std::norm(spec(u, v));
      ++out.count[ring];
    }
  }
  out.empty.resize(num_rings);
  for (int r = 0; r < num_rings; ++r) {
    out.empty[r] = out.count[r] == 0;
    if (!out.empty[r]) out.power[r] /= static_cast<double>(out.count[r]);
  }
  return out;
}

double psd_loss(const Image& pred, const Image& target, const Image& mask, int num_rings) {
  check_mask(pred, target, mask, "psd_loss");
  const RadialPsd a = radial_psd(mask * pred, num_rings);
  const RadialPsd b = radial_psd(mask * target, num_rings);
  double acc = 0.0;
  for (int r = 0; r < num_rings; ++r) acc += std::fabs(a.power[r] - b.power[r]);
  return acc / num_rings;
}

double psd_loss(const Image& pred, const Image& target, const MaskSpec& mask, int num_rings) {
  return psd_loss(pred, target, mask.pixel_mask(), num_rings);
}

double stage2_objective(double mae, double kd, double lb, const LossWeights& w) {
  return mae + w.lambda_kd * kd + w.mu_lb * lb;
}

double stage3_objective(double joint, double fft, double psd, const LossWeights& w) {
  return joint + w.nu_freq * (fft + w.eta_psd * psd);
}

LossValue total_restoration_loss(const Image& pred, const Image& target, const LossWeights& w) {
  w.validate();
  LossValue total = charbonnier(pred, target, w.epsilon);
  const LossValue edge = edge_loss(pred, target);
  const LossValue tv = tv_loss(pred);
  total.value += w.lambda_e * edge.value + w.lambda_tv * tv.value;
  total.grad += w.lambda_e * edge.grad + w.lambda_tv * tv.grad;
  return total;
}

void to_json(nlohmann::json& j, const LossWeights& w) {
  j = nlohmann::json{{"lambda_kd", w.lambda_kd}, {"mu_lb", w.mu_lb},         {"eta_psd", w.eta_psd},
                     {"nu_freq", w.nu_freq},     {"lambda_e", w.lambda_e},   {"lambda_tv", w.lambda_tv},
                     {"epsilon", w.epsilon}};
}

void from_json(const nlohmann::json& j, LossWeights& w) {
  w.lambda_kd = j.value("lambda_kd", w.lambda_kd);
  w.mu_lb = j.value("mu_lb", w.mu_lb);
  w.eta_psd = j.value("eta_psd", w.eta_psd);
  w.nu_freq = j.value("nu_freq", w.nu_freq);
  w.lambda_e = j.value("lambda_e", w.lambda_e);
  w.lambda_tv = j.value("lambda_tv", w.lambda_tv);
  w.epsilon = j.value("epsilon", w.epsilon);
}

}  // namespace semkit
