#pragma once

#include "semkit/core.hpp"

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include <vector>

namespace semkit {

/// B samples × P tokens × d features, stored as a (B·P) × d matrix with the token
/// index varying fastest within a sample.
struct TokenBatch {
  Eigen::Index batch = 0;
  Eigen::Index tokens = 0;
  Eigen::MatrixXd values;

  TokenBatch() = default;
  TokenBatch(Eigen::Index b, Eigen::Index p, Eigen::MatrixXd v);

  Eigen::Index dim() const { return values.cols(); }
  Eigen::Index count() const { return values.rows(); }
};

/// Routing weights, one row of K weights per token.
using Routing = Eigen::MatrixXd;

/// Affine stand-in for an expert FFN: h ↦ W h + b.
struct Expert {
  Eigen::MatrixXd weight;  // d × d
  Eigen::VectorXd bias;    // d
};

struct ExpertSet {
  std::vector<Expert> experts;

  Eigen::Index size() const { return static_cast<Eigen::Index>(experts.size()); }
  void validate(Eigen::Index dim) const;
};

/// Gate logits G(h) = W h + b with W of shape K × d.
struct GateParams {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  Eigen::Index experts() const { return weight.rows(); }
};

/// Per-token softmax of the gate logits, computed with max subtraction.
Routing gate(const TokenBatch& tokens, const GateParams& g);

/// Softmax of each row of a logit matrix.
Routing softmax_rows(const Eigen::MatrixXd& logits);

/// Keeps the k largest weights per token (ties to the lowest expert index),
/// zeroes the rest and renormalises the kept weights to sum to one.
Routing top_k_route(const Routing& alpha, Eigen::Index k);

/// Number of expert evaluations performed by moe_forward, per expert.
struct ExpertUsage {
  std::vector<Eigen::Index> calls;
};

/// Σ_k α_k(h) FFN_k(h) with top-k routing. Experts with zero routing weight for a
/// token are not evaluated for that token.
TokenBatch moe_forward(const TokenBatch& tokens, const ExpertSet& experts, const GateParams& g,
                       Eigen::Index k, ExpertUsage* usage = nullptr);

/// K · Σ_k ᾱ_k² with ᾱ the token-averaged routing weights.
double load_balance_loss(const Routing& alpha);

void to_json(nlohmann::json& j, const ExpertSet& e);
void from_json(const nlohmann::json& j, ExpertSet& e);
void to_json(nlohmann::json& j, const GateParams& g);
void from_json(const nlohmann::json& j, GateParams& g);

}  // namespace semkit
