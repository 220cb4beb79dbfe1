#pragma once

#include "semkit/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

namespace semkit {

/// 10·log10(peak² / MSE); +∞ when the inputs are identical.
template <typename A, typename B>
double psnr(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b, double peak = 1.0) {
  require_same_shape(a, b, "psnr");
  if (a.size() == 0) throw ArgumentError("psnr: empty image");
  const double mse = (a.template cast<double>() - b.template cast<double>()).square().mean();
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

/// Mean SSIM over the valid region of an 11×11 Gaussian window (σ = 1.5) with
/// C1 = (0.01·peak)², C2 = (0.03·peak)².
double ssim(const Image& a, const Image& b, double peak = 1.0);

/// Local SSIM values, (H−10) × (W−10).
Image ssim_map(const Image& a, const Image& b, double peak = 1.0);

/// Normalised 11-tap Gaussian used by ssim.
Eigen::ArrayXd ssim_window_1d();

/// n × d embeddings with one cluster label per row.
struct EmbeddingSet {
  Eigen::MatrixXd vectors;
  std::vector<int> labels;

  /// Number of clusters (max label + 1). Validates labels.
  int clusters() const;
};

/// Rows of "label,v1,...,vd". A header row whose first field is not an integer is skipped.
EmbeddingSet read_embeddings_csv(const std::filesystem::path& path);

/// Mean silhouette with cosine distance; members of singleton clusters score 0.
double silhouette_cosine(const EmbeddingSet& e);

/// Davies–Bouldin index with Euclidean distances.
double davies_bouldin(const EmbeddingSet& e);

/// Calinski–Harabasz index; +∞ when within-cluster dispersion is zero.
double calinski_harabasz(const EmbeddingSet& e);

}  // namespace semkit
