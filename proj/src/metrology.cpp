#include "semkit/metrology.hpp"

#include "semkit/fft.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace semkit {
namespace {

constexpr int kHistogramBins = 256;
constexpr Eigen::Index kMinRows = 8;

struct Segment {
  double left;
  double right;
  double centre() const { return 0.5 * (left + right); }
};

struct Track {
  double last_centre;
  std::vector<std::optional<Segment>> per_row;
  Eigen::Index hits = 0;
};

std::vector<Segment> row_segments(const Image& img, Eigen::Index r, double t, double min_width) {
  std::vector<Segment> out;
  double open = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index c = 0; c + 1 < img.cols(); ++c) {
    const double a = img(r, c), b = img(r, c + 1);
    if (a < t && b >= t) {
      open = static_cast<double>(c) + (t - a) / (b - a);
    } else if (a >= t && b < t && !std::isnan(open)) {
      const double right = static_cast<double>(c) + (t - a) / (b - a);
      if (right - open >= min_width) out.push_back({open, right});
      open = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

double sample_std(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size() - 1));
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
  Eigen::VectorXd v(m.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) v(k++) = m(i, j);
  }
  return v;
}

}  // namespace

void EdgeSet::validate() const {
  if (left.rows() != right.rows() || left.cols() != right.cols()) throw ArgumentError("EdgeSet: left/right shape mismatch");
  if (static_cast<Eigen::Index>(row_index.size()) != left.cols()) throw ArgumentError("EdgeSet: row index length mismatch");
  if (lines() < 1) throw DataError("EdgeSet: no lines");
  if (!(pixel_size > 0.0)) throw ArgumentError("EdgeSet: pixel size must be positive");
  if (poly_degree < 0) throw ArgumentError("EdgeSet: negative polynomial degree");
  if (!((right - left).array() > 0.0).all()) throw ArgumentError("EdgeSet: left edge must precede right edge");
}

double otsu_threshold(const Image& img) {
  if (img.size() == 0) throw DataError("no lines detected: empty image");
  const double lo = img.minCoeff(), hi = img.maxCoeff();
  if (!(hi - lo > 1e-12)) throw DataError("no lines detected: image has no contrast");
  std::array<double, kHistogramBins> hist{};
  const double scale = (kHistogramBins - 1) / (hi - lo);
  auto bin_of = [&](double v) { return std::clamp(static_cast<int>((v - lo) * scale), 0, kHistogramBins - 1); };
  for (Eigen::Index i = 0; i < img.size(); ++i) hist[bin_of(img.data()[i])] += 1.0;

  const double total = static_cast<double>(img.size());
  double sum_all = 0.0;
  for (int b = 0; b < kHistogramBins; ++b) sum_all += b * hist[b];
  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int split = 0;
  for (int b = 0; b < kHistogramBins - 1; ++b) {
    w0 += hist[b];
    sum0 += b * hist[b];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      split = b;
    }
  }
  double s0 = 0.0, s1 = 0.0, n0 = 0.0, n1 = 0.0;
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    const double v = img.data()[i];
    if (bin_of(v) <= split) {
      s0 += v;
      n0 += 1.0;
    } else {
      s1 += v;
      n1 += 1.0;
    }
  }
  return 0.5 * (s0 / n0 + s1 / n1);
}

EdgeSet detect_edges(const Image& img, const DetectOptions& opts) {
  const double t = otsu_threshold(img);
  std::vector<Track> tracks;
  const Eigen::Index rows = img.rows();
  for (Eigen::Index r = 0; r < rows; ++r) {
    std::vector<bool> claimed(tracks.size(), false);
    for (const Segment& s : row_segments(img, r, t, opts.min_width)) {
      std::optional<std::size_t> best;
      double best_gap = opts.max_gap;
      for (std::size_t k = 0; k < tracks.size(); ++k) {
        const double gap = std::fabs(s.centre() - tracks[k].last_centre);
        if (!claimed[k] && gap <= best_gap) {
          best_gap = gap;
          best = k;
        }
      }
      if (!best) {
        tracks.push_back({s.centre(), std::vector<std::optional<Segment>>(rows), 0});
        claimed.push_back(false);
        best = tracks.size() - 1;
      }
      Track& tr = tracks[*best];
      tr.per_row[r] = s;
      tr.last_centre = s.centre();
      ++tr.hits;
      claimed[*best] = true;
    }
  }

  std::vector<const Track*> kept;
  for (const Track& tr : tracks) {
    if (static_cast<double>(tr.hits) >= opts.min_coverage * static_cast<double>(rows)) kept.push_back(&tr);
  }
  if (kept.empty()) throw DataError("no lines detected");
  std::sort(kept.begin(), kept.end(), [](const Track* a, const Track* b) { return a->last_centre < b->last_centre; });

  std::vector<Eigen::Index> common;
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (std::all_of(kept.begin(), kept.end(), [r](const Track* tr) { return tr->per_row[r].has_value(); })) {
      common.push_back(r);
    }
  }
  if (common.empty()) throw DataError("no lines detected: no row crosses every line");

  EdgeSet e;
  const auto n_lines = static_cast<Eigen::Index>(kept.size());
  const auto n_rows = static_cast<Eigen::Index>(common.size());
  e.left.resize(n_lines, n_rows);
  e.right.resize(n_lines, n_rows);
  for (Eigen::Index l = 0; l < n_lines; ++l) {
    for (Eigen::Index j = 0; j < n_rows; ++j) {
      const Segment& s = *kept[l]->per_row[common[j]];
      e.left(l, j) = s.left;
      e.right(l, j) = s.right;
    }
  }
  e.row_index.assign(common.begin(), common.end());
  e.pixel_size = opts.pixel_size;
  e.poly_degree = opts.poly_degree;
  return e;
}

Eigen::MatrixXd detrend(const Eigen::MatrixXd& traj, const std::vector<double>& t, int degree) {
  const auto n = static_cast<Eigen::Index>(t.size());
  if (traj.cols() != n) throw ArgumentError("detrend: sample count mismatch");
  if (degree < 0) throw ArgumentError("detrend: negative degree");
  const Eigen::Index terms = std::min<Eigen::Index>(degree + 1, n);
  const auto [tmin, tmax] = std::minmax_element(t.begin(), t.end());
  const double centre = 0.5 * (*tmin + *tmax);
  const double half = std::max(0.5 * (*tmax - *tmin), 1.0);
  Eigen::MatrixXd basis(n, terms);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = (t[i] - centre) / half;
    double p = 1.0;
    for (Eigen::Index k = 0; k < terms; ++k) {
      basis(i, k) = p;
      p *= s;
    }
  }
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(basis);
  Eigen::MatrixXd out(traj.rows(), traj.cols());
  for (Eigen::Index r = 0; r < traj.rows(); ++r) {
    const Eigen::VectorXd y = traj.row(r).transpose();
    out.row(r) = (y - basis * qr.solve(y)).transpose();
  }
  return out;
}

MetrologyReport measure(const EdgeSet& edges, double sigma_multiple) {
  edges.validate();
  if (edges.rows() < kMinRows) throw DataError("measure: insufficient data (fewer than 8 rows per line)");
  if (!(sigma_multiple > 0.0)) throw ArgumentError("measure: sigma multiple must be positive");
  const double px = edges.pixel_size;
  const Eigen::MatrixXd width = edges.right - edges.left;
  const Eigen::MatrixXd left_res = detrend(edges.left, edges.row_index, edges.poly_degree);
  const Eigen::MatrixXd right_res = detrend(edges.right, edges.row_index, edges.poly_degree);

  MetrologyReport rep;
  rep.pixel_size = px;
  rep.sigma_multiple = sigma_multiple;
  rep.lines = edges.lines();
  rep.rows = edges.rows();
  rep.cd = width.mean() * px;
  rep.cd_std = sample_std(width.rowwise().mean()) * px;
  rep.lwr = sigma_multiple * sample_std(flatten(right_res - left_res)) * px;
  Eigen::VectorXd both(2 * left_res.size());
  both << flatten(left_res), flatten(right_res);
  rep.ler = sigma_multiple * sample_std(both) * px;
  rep.psd = lwr_psd(edges);
  return rep;
}

std::vector<PsdPoint> lwr_psd(const EdgeSet& edges) {
  edges.validate();
  const Eigen::Index n = edges.rows();
  if (n < kMinRows) throw DataError("lwr_psd: insufficient data (fewer than 8 rows per line)");
  const double px = edges.pixel_size;
  const Eigen::Index bins = n / 2;
  std::vector<PsdPoint> out(bins);
  for (Eigen::Index k = 1; k <= bins; ++k) out[k - 1] = {static_cast<double>(k) / (static_cast<double>(n) * px), 0.0};

  const Eigen::MatrixXd width = (edges.right - edges.left) * px;
  for (Eigen::Index l = 0; l < edges.lines(); ++l) {
    const Eigen::VectorXd w = width.row(l).transpose();
    const Eigen::VectorXcd spec = fft1((w.array() - w.mean()).matrix());
    for (Eigen::Index k = 1; k <= bins; ++k) {
      const double fold = (n % 2 == 0 && k == bins) ? 1.0 : 2.0;
      out[k - 1].power += fold * std::norm(spec(k)) * px / static_cast<double>(n);
    }
  }
  for (PsdPoint& p : out) p.power /= static_cast<double>(edges.lines());
  return out;
}

double psd_summary(const MetrologyReport& report, const PsdBand& band) {
  double acc = 0.0;
  int count = 0;
  for (const PsdPoint& p : report.psd) {
    const double cycles_per_pixel = p.frequency * report.pixel_size;
    if (cycles_per_pixel >= band.lo && cycles_per_pixel <= band.hi) {
      acc += std::log10(std::max(p.power, 1e-20));
      ++count;
    }
  }
  if (count == 0) throw DataError("psd_summary: no PSD bins inside the summary band");
  return acc / count;
}

MetricErrors compare_reports(const MetrologyReport& test, const MetrologyReport& reference, const PsdBand& band) {
  return {std::fabs(test.cd - reference.cd), std::fabs(test.cd_std - reference.cd_std),
          std::fabs(test.lwr - reference.lwr), std::fabs(test.ler - reference.ler),
          std::fabs(psd_summary(test, band) - psd_summary(reference, band))};
}

ErrorAggregate aggregate_errors(const std::vector<std::optional<MetricErrors>>& per_image) {
  ErrorAggregate agg;
  double cd = 0.0, all = 0.0;
  for (const auto& e : per_image) {
    if (!e) {
      ++agg.unmeasurable;
      continue;
    }
    ++agg.measured;
    cd += e->cd;
    all += e->cd + e->cd_std + e->lwr + e->ler + e->psd;
  }
  if (agg.measured == 0) {
    agg.cd_mae = agg.avg_mae = std::numeric_limits<double>::quiet_NaN();
    return agg;
  }
  agg.cd_mae = cd / static_cast<double>(agg.measured);
  agg.avg_mae = all / (5.0 * static_cast<double>(agg.measured));
  return agg;
}

void to_json(nlohmann::json& j, const MetrologyReport& r) {
  nlohmann::json psd = nlohmann::json::array();
  for (const PsdPoint& p : r.psd) psd.push_back({p.frequency, p.power});
  j = nlohmann::json{{"cd", r.cd},       {"cd_std", r.cd_std}, {"lwr", r.lwr},
                     {"ler", r.ler},     {"lines", r.lines},   {"rows", r.rows},
                     {"pixel_size", r.pixel_size}, {"sigma_multiple", r.sigma_multiple}, {"psd", psd}};
}

void to_json(nlohmann::json& j, const MetricErrors& e) {
  j = nlohmann::json{{"cd", e.cd}, {"cd_std", e.cd_std}, {"lwr", e.lwr}, {"ler", e.ler}, {"psd", e.psd}};
}

}  // namespace semkit
