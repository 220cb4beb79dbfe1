#pragma once

#include "semkit/core.hpp"
#include "semkit/random.hpp"

#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace semkit {

/// Weights of the pretraining and restoration objectives.
struct LossWeights {
  double lambda_kd = 1.0;   // distillation, stage 2
  double mu_lb = 0.01;      // load balancing, stage 2
  double eta_psd = 1.0;     // PSD term inside the frequency loss
  double nu_freq = 0.1;     // frequency loss, stage 3
  double lambda_e = 3.0;    // edge term, restoration
  double lambda_tv = 10.0;  // total variation, restoration
  double epsilon = 1e-3;    // Charbonnier

  void validate() const;
};

/// A scalar loss and its (sub)gradient with respect to the prediction.
struct LossValue {
  double value = 0.0;
  Image grad;
};

/// Patch-grid mask. Patches are numbered row-major over the (rows/s)×(cols/s) grid.
struct MaskSpec {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index patch_size = 16;
  double ratio = 0.75;
  std::vector<Eigen::Index> masked_patches;  // sorted ascending

  Eigen::Index grid_rows() const { return rows / patch_size; }
  Eigen::Index grid_cols() const { return cols / patch_size; }
  Eigen::Index patch_count() const { return grid_rows() * grid_cols(); }

  /// Pixel mask M with 1 inside masked patches.
  Image pixel_mask() const;

  /// Explicit patch selection. Ratio is recorded as |patches| / P.
  static MaskSpec from_patches(Eigen::Index rows, Eigen::Index cols, Eigen::Index patch_size,
                               std::vector<Eigen::Index> patches);
};

/// Uniform random subset of round(ratio · P) patches. At least one patch must stay
/// visible and at least one must be masked.
MaskSpec sample_mask(Eigen::Index rows, Eigen::Index cols, Eigen::Index patch_size, double ratio,
                     const Seed& seed);

/// (1/||M||₁) Σ M |pred − target|. `mask` is a 0/1 pixel mask.
LossValue masked_l1(const Image& pred, const Image& target, const Image& mask);
LossValue masked_l1(const Image& pred, const Image& target, const MaskSpec& mask);

/// Distillation over masked pixels; identical to masked_l1 against the teacher.
LossValue kd_loss(const Image& student, const Image& teacher, const MaskSpec& mask);

LossValue charbonnier(const Image& pred, const Image& target, double eps);

/// Forward differences along both axes; the last row/column difference is omitted.
LossValue edge_loss(const Image& pred, const Image& target);

/// Anisotropic total variation.
LossValue tv_loss(const Image& pred);

/// E_M = DFT(M ⊙ (pred − target)), unnormalized forward transform.
ComplexImage masked_error_spectrum(const Image& pred, const Image& target, const Image& mask);

/// (1/(H·W)) Σ |E_M|.
double fft_loss(const Image& pred, const Image& target, const Image& mask);
double fft_loss(const Image& pred, const Image& target, const MaskSpec& mask);

struct RadialPsd {
  std::vector<double> power;        // mean |DFT|² per ring, 0 for empty rings
  std::vector<Eigen::Index> count;  // bins per ring
  std::vector<bool> empty;
};

/// Rings of equal width in ρ = sqrt((f_u/H)² + (f_v/W)²) over centered signed
/// frequency indices; ring r covers [r·ρmax/R, (r+1)·ρmax/R), with ρmax itself
/// assigned to the last ring.
RadialPsd radial_psd(const Image& img, int num_rings);

/// (1/R) Σ_r |PSD(M⊙pred)(r) − PSD(M⊙target)(r)|.
double psd_loss(const Image& pred, const Image& target, const Image& mask, int num_rings);
double psd_loss(const Image& pred, const Image& target, const MaskSpec& mask, int num_rings);

/// mae + λ·kd + μ·lb
double stage2_objective(double mae, double kd, double lb, const LossWeights& w);

/// joint + ν·(fft + η·psd)
double stage3_objective(double joint, double fft, double psd, const LossWeights& w);

/// Charbonnier + λe·edge + λtv·TV(pred).
LossValue total_restoration_loss(const Image& pred, const Image& target, const LossWeights& w);

void to_json(nlohmann::json& j, const LossWeights& w);
void from_json(const nlohmann::json& j, LossWeights& w);

}  // namespace semkit
