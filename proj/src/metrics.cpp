#include "semkit/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

namespace semkit {
namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;

// Valid-region separable filter.
Image filter_valid(const Image& img, const Eigen::ArrayXd& w) {
  const Eigen::Index k = w.size();
  const Eigen::Index rows = img.rows() - k + 1, cols = img.cols() - k + 1;
  Image horiz = Image::Zero(img.rows(), cols);
  for (Eigen::Index t = 0; t < k; ++t) horiz += w(t) * img.middleCols(t, cols);
  Image out = Image::Zero(rows, cols);
  for (Eigen::Index t = 0; t < k; ++t) out += w(t) * horiz.middleRows(t, rows);
  return out;
}

std::vector<std::vector<Eigen::Index>> members_by_cluster(const EmbeddingSet& e, int k) {
  std::vector<std::vector<Eigen::Index>> members(k);
  for (std::size_t i = 0; i < e.labels.size(); ++i) members[e.labels[i]].push_back(static_cast<Eigen::Index>(i));
  return members;
}

Eigen::MatrixXd centroids(const EmbeddingSet& e, const std::vector<std::vector<Eigen::Index>>& members) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(members.size()), e.vectors.cols());
  for (std::size_t k = 0; k < members.size(); ++k) {
    for (Eigen::Index i : members[k]) c.row(k) += e.vectors.row(i);
    c.row(k) /= static_cast<double>(members[k].size());
  }
  return c;
}

}  // namespace

Eigen::ArrayXd ssim_window_1d() {
  Eigen::ArrayXd w(kWindow);
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    w(i) = std::exp(-x * x / (2.0 * kWindowSigma * kWindowSigma));
  }
  return w / w.sum();
}

Image ssim_map(const Image& a, const Image& b, double peak) {
  require_same_shape(a, b, "ssim");
  if (a.rows() < kWindow || a.cols() < kWindow) throw ArgumentError("ssim: image smaller than the 11x11 window");
  const Eigen::ArrayXd w = ssim_window_1d();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);
  const Image mu_a = filter_valid(a, w);
  const Image mu_b = filter_valid(b, w);
  const Image var_a = filter_valid(a * a, w) - mu_a * mu_a;
  const Image var_b = filter_valid(b * b, w) - mu_b * mu_b;
  const Image cov = filter_valid(a * b, w) - mu_a * mu_b;
  return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
         ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
}

double ssim(const Image& a, const Image& b, double peak) { return ssim_map(a, b, peak).mean(); }

int EmbeddingSet::clusters() const {
  if (static_cast<Eigen::Index>(labels.size()) != vectors.rows()) {
    throw ArgumentError("embeddings: label count does not match vector count");
  }
  if (labels.empty()) throw ArgumentError("embeddings: empty set");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  if (*std::min_element(labels.begin(), labels.end()) < 0) throw ArgumentError("embeddings: negative label");
  std::vector<bool> seen(k, false);
  for (int l : labels) seen[l] = true;
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw ArgumentError("embeddings: some cluster label in [0, K) has no members");
  }
  return k;
}

EmbeddingSet read_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<int> labels;
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 2) throw FormatError("embeddings CSV: need a label and at least one value");
    int label = 0;
    try {
      std::size_t used = 0;
      label = std::stoi(fields[0], &used);
    } catch (const std::exception&) {
      if (first) {
        first = false;
        continue;
      }
      throw FormatError("embeddings CSV: bad label '" + fields[0] + "'");
    }
    first = false;
    std::vector<double> v;
    for (std::size_t i = 1; i < fields.size(); ++i) v.push_back(std::stod(fields[i]));
    if (!rows.empty() && v.size() != rows.front().size()) throw FormatError("embeddings CSV: ragged rows");
    labels.push_back(label);
    rows.push_back(std::move(v));
  }
  EmbeddingSet e;
  e.labels = std::move(labels);
  e.vectors.resize(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) e.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return e;
}

double silhouette_cosine(const EmbeddingSet& e) {
  const int k = e.clusters();
  if (k < 2) throw ArgumentError("silhouette: need at least two clusters");
  const Eigen::VectorXd norms = e.vectors.rowwise().norm();
  if ((norms.array() == 0.0).any()) throw ArgumentError("silhouette: zero-norm vector under cosine distance");
  const Eigen::MatrixXd unit = norms.asDiagonal().inverse() * e.vectors;
  const Eigen::MatrixXd dist = (1.0 - (unit * unit.transpose()).array()).matrix();
  const auto members = members_by_cluster(e, k);

  const Eigen::Index n = e.vectors.rows();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = e.labels[i];
    if (members[own].size() == 1) continue;
    double a = 0.0;
    for (Eigen::Index j : members[own]) {
      if (j != i) a += dist(i, j);
    }
    a /= static_cast<double>(members[own].size() - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c == own) continue;
      double mean = 0.0;
      for (Eigen::Index j : members[c]) mean += dist(i, j);
      b = std::min(b, mean / static_cast<double>(members[c].size()));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

double davies_bouldin(const EmbeddingSet& e) {
  const int k = e.clusters();
  if (k < 2) throw ArgumentError("davies_bouldin: need at least two clusters");
  const auto members = members_by_cluster(e, k);
  const Eigen::MatrixXd c = centroids(e, members);
  Eigen::VectorXd scatter = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < k; ++i) {
    for (Eigen::Index m : members[i]) scatter(i) += (e.vectors.row(m) - c.row(i)).norm();
    scatter(i) /= static_cast<double>(members[i].size());
  }
  double total = 0.0;
  for (int i = 0; i < k; ++i) {
    double worst = 0.0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      const double gap = (c.row(i) - c.row(j)).norm();
      if (gap == 0.0) {
        throw NumericError("davies_bouldin: clusters " + std::to_string(i) + " and " + std::to_string(j) +
                           " have coincident centroids");
      }
      worst = std::max(worst, (scatter(i) + scatter(j)) / gap);
    }
    total += worst;
  }
  return total / k;
}

double calinski_harabasz(const EmbeddingSet& e) {
  const int k = e.clusters();
  const Eigen::Index n = e.vectors.rows();
  if (k < 2) throw ArgumentError("calinski_harabasz: need at least two clusters");
  if (n <= k) throw ArgumentError("calinski_harabasz: need more samples than clusters");
  const auto members = members_by_cluster(e, k);
  const Eigen::MatrixXd c = centroids(e, members);
  const Eigen::RowVectorXd overall = e.vectors.colwise().mean();
  double between = 0.0, within = 0.0;
  for (int i = 0; i < k; ++i) {
    between += static_cast<double>(members[i].size()) * (c.row(i) - overall).squaredNorm();
    for (Eigen::Index m : members[i]) within += (e.vectors.row(m) - c.row(i)).squaredNorm();
  }
  if (within == 0.0) return std::numeric_limits<double>::infinity();
  return (between / (k - 1)) / (within / static_cast<double>(n - k));
}

}  // namespace semkit
