#pragma once

#include "semkit/core.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <vector>

namespace semkit {

struct DetectOptions {
  /// Maximum column distance between a segment centre and its track in the
  /// previous row.
  double max_gap = 5.0;
  /// Degree of the least-squares trend removed from each edge before roughness.
  int poly_degree = 1;
  double pixel_size = 1.0;
  /// Segments narrower than this (pixels) are treated as noise.
  double min_width = 1.0;
  /// A track must be present in at least this fraction of image rows.
  double min_coverage = 0.5;
};

/// Sub-pixel edge trajectories of vertical lines. Row r of `left`/`right` is one
/// line; column j is image row `row_index[j]`. Positions are column coordinates
/// in pixels with pixel centres at integers.
struct EdgeSet {
  Eigen::MatrixXd left;
  Eigen::MatrixXd right;
  std::vector<double> row_index;
  double pixel_size = 1.0;
  int poly_degree = 1;

  Eigen::Index lines() const { return left.rows(); }
  Eigen::Index rows() const { return left.cols(); }
  void validate() const;
};

struct PsdPoint {
  double frequency;  // cycles per physical unit
  double power;
};

struct MetrologyReport {
  double cd = 0.0;
  double cd_std = 0.0;
  double lwr = 0.0;
  double ler = 0.0;
  std::vector<PsdPoint> psd;
  double pixel_size = 1.0;
  double sigma_multiple = 3.0;
  Eigen::Index lines = 0;
  Eigen::Index rows = 0;
};

/// Otsu split of a 256-bin histogram; returns the midpoint of the two class means.
double otsu_threshold(const Image& img);

/// Bright-line detection: global threshold, per-row threshold crossings refined by
/// linear interpolation, then grouping of row segments into lines.
/// Throws DataError("no lines detected") when nothing usable is found.
EdgeSet detect_edges(const Image& img, const DetectOptions& opts = {});

/// Residuals of each row of `traj` after a least-squares polynomial fit in `t`.
Eigen::MatrixXd detrend(const Eigen::MatrixXd& traj, const std::vector<double>& t, int degree);

/// CD, CD spread and `sigma_multiple`-σ LWR/LER in physical units. Needs ≥ 8 rows.
MetrologyReport measure(const EdgeSet& edges, double sigma_multiple = 3.0);

/// One-sided periodogram of the mean-removed width per line, averaged over lines:
/// P(f_k) = c_k |DFT_k|² Δ / n at f_k = k/(nΔ), k = 1..⌊n/2⌋, where c_k = 2 except
/// c = 1 at the Nyquist bin of even n. Σ P equals Δ · Σ (w − w̄)².
std::vector<PsdPoint> lwr_psd(const EdgeSet& edges);

struct PsdBand {
  double lo = 0.01;  // cycles per pixel
  double hi = 0.25;
};

/// Mean log10 power over the band (powers floored at 1e-20).
double psd_summary(const MetrologyReport& report, const PsdBand& band = {});

struct MetricErrors {
  double cd = 0.0;
  double cd_std = 0.0;
  double lwr = 0.0;
  double ler = 0.0;
  double psd = 0.0;
};

MetricErrors compare_reports(const MetrologyReport& test, const MetrologyReport& reference,
                             const PsdBand& band = {});

struct ErrorAggregate {
  double cd_mae = 0.0;
  double avg_mae = 0.0;
  Eigen::Index measured = 0;
  Eigen::Index unmeasurable = 0;
};

/// CD(MAE) is the mean |ΔCD| over measured images; Avg(MAE) is the mean of every
/// per-metric error of every measured image. Missing entries are counted, not used.
ErrorAggregate aggregate_errors(const std::vector<std::optional<MetricErrors>>& per_image);

void to_json(nlohmann::json& j, const MetrologyReport& r);
void to_json(nlohmann::json& j, const MetricErrors& e);

}  // namespace semkit
