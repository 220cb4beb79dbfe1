#include "semkit/moe.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <numeric>

namespace semkit {

TokenBatch::TokenBatch(Eigen::Index b, Eigen::Index p, Eigen::MatrixXd v)
    : batch(b), tokens(p), values(std::move(v)) {
  if (b < 0 || p < 0 || values.rows() != b * p) throw ArgumentError("TokenBatch: rows must equal B·P");
  if (!values.allFinite()) throw ArgumentError("TokenBatch: non-finite values");
}

void ExpertSet::validate(Eigen::Index dim) const {
  if (experts.empty()) throw ArgumentError("ExpertSet: need at least one expert");
  for (const Expert& e : experts) {
    if (e.weight.rows() != dim || e.weight.cols() != dim || e.bias.size() != dim) {
      throw ArgumentError("ExpertSet: expert shape does not match token dimension");
    }
    if (!e.weight.allFinite() || !e.bias.allFinite()) throw ArgumentError("ExpertSet: non-finite weights");
  }
}

Routing softmax_rows(const Eigen::MatrixXd& logits) {
  Routing out(logits.rows(), logits.cols());
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    const double m = logits.row(t).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(t).array() - m).exp().matrix();
    out.row(t) = e / e.sum();
  }
  return out;
}

Routing gate(const TokenBatch& tokens, const GateParams& g) {
  if (g.weight.cols() != tokens.dim() || g.bias.size() != g.weight.rows()) {
    throw ArgumentError("gate: parameter shape does not match tokens");
  }
  if (g.weight.rows() < 1) throw ArgumentError("gate: need at least one expert");
  const Eigen::MatrixXd logits = (tokens.values * g.weight.transpose()).rowwise() + g.bias.transpose();
  return softmax_rows(logits);
}

Routing top_k_route(const Routing& alpha, Eigen::Index k) {
  const Eigen::Index experts = alpha.cols();
  if (k < 1 || k > experts) throw ArgumentError("top_k_route: k must lie in [1, K]");
  Routing out = Routing::Zero(alpha.rows(), experts);
  std::vector<Eigen::Index> order(experts);
  for (Eigen::Index t = 0; t < alpha.rows(); ++t) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return alpha(t, a) > alpha(t, b); });
    double kept = 0.0;
    for (Eigen::Index i = 0; i < k; ++i) kept += alpha(t, order[i]);
    for (Eigen::Index i = 0; i < k; ++i) {
      out(t, order[i]) = kept > 0.0 ? alpha(t, order[i]) / kept : 1.0 / static_cast<double>(k);
    }
  }
  return out;
}

TokenBatch moe_forward(const TokenBatch& tokens, const ExpertSet& experts, const GateParams& g,
                       Eigen::Index k, ExpertUsage* usage) {
  experts.validate(tokens.dim());
  if (g.experts() != experts.size()) throw ArgumentError("moe_forward: gate and expert counts differ");
  const Routing routes = top_k_route(gate(tokens, g), k);
  if (usage) usage->calls.assign(experts.size(), 0);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(tokens.count(), tokens.dim());
  for (Eigen::Index t = 0; t < tokens.count(); ++t) {
    const Eigen::VectorXd h = tokens.values.row(t).transpose();
    for (Eigen::Index e = 0; e < experts.size(); ++e) {
      const double w = routes(t, e);
      if (w == 0.0) continue;
      const Expert& ex = experts.experts[e];
      out.row(t) += w * (ex.weight * h + ex.bias).transpose();
      if (usage) ++usage->calls[e];
    }
  }
  return TokenBatch(tokens.batch, tokens.tokens, std::move(out));
}

double load_balance_loss(const Routing& alpha) {
  if (alpha.rows() < 1 || alpha.cols() < 1) throw ArgumentError("load_balance_loss: empty routing");
  const Eigen::RowVectorXd mean = alpha.colwise().mean();
  return static_cast<double>(alpha.cols()) * mean.squaredNorm();
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r ? static_cast<Eigen::Index>(rows.front().size()) : 0;
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != c) throw FormatError("matrix JSON: ragged rows");
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = rows[i][k];
  }
  return m;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

void to_json(nlohmann::json& j, const ExpertSet& e) {
  j = nlohmann::json::array();
  for (const Expert& ex : e.experts) j.push_back({{"weight", matrix_json(ex.weight)}, {"bias", to_std(ex.bias)}});
}

void from_json(const nlohmann::json& j, ExpertSet& e) {
  e.experts.clear();
  for (const auto& item : j) {
    e.experts.push_back({matrix_from_json(item.at("weight")), vector_from_json(item.at("bias"))});
  }
}

void to_json(nlohmann::json& j, const GateParams& g) {
  j = nlohmann::json{{"weight", matrix_json(g.weight)}, {"bias", to_std(g.bias)}};
}

void from_json(const nlohmann::json& j, GateParams& g) {
  g.weight = matrix_from_json(j.at("weight"));
  g.bias = vector_from_json(j.at("bias"));
}

}  // namespace semkit
