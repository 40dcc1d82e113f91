#include "bfarl/losses.hpp"

#include <cmath>
#include <string>

namespace bfarl {

void MetaParams::validate() const {
  for (int g = 0; g < kNumGroups; ++g) {
    if (!std::isfinite(alpha[g]) || !std::isfinite(beta[g]))
      throw NumericError("meta parameters must be finite");
    if (alpha[g] < 0.0) throw DomainError("alpha components must be >= 0");
  }
}

std::array<double, 4> MetaParams::as_array() const {
  return {alpha[0], alpha[1], beta[0], beta[1]};
}

MetaParams MetaParams::from_array(const std::array<double, 4>& v) {
  MetaParams m;
  m.alpha = {v[0], v[1]};
  m.beta = {v[2], v[3]};
  return m;
}

double MetaParams::beta_norm() const { return std::hypot(beta[0], beta[1]); }

GroupLabelMarginals estimate_marginals(const Dataset& ds) {
  PerGroup<std::size_t> rows{0, 0}, pos{0, 0};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Group g = ds.a[i];
    check_group(g);
    ++rows[g];
    if (is_positive(ds.y[i])) ++pos[g];
  }
  GroupLabelMarginals m;
  for (int g = 0; g < kNumGroups; ++g) {
    if (rows[g] == 0)
      throw DomainError("group " + std::to_string(g) + " is empty; marginal undefined");
    m.p_pos[g] = static_cast<double>(pos[g]) / static_cast<double>(rows[g]);
  }
  return m;
}

double expected_group_loss(double p, const GroupLabelMarginals& marginals, Group a) {
  check_group(a);
  const double q = marginals.p_pos[a];
  return q * bce_loss(p, Label::positive) + (1.0 - q) * bce_loss(p, Label::negative);
}

double peer_loss(double sample_loss, double peer_term, double alpha_balance) {
  return sample_loss - alpha_balance * peer_term;
}

double expected_peer_term(const Eigen::VectorXd& probs, const Dataset& batch,
                          const GroupLabelMarginals& marginals) {
  if (probs.size() == 0) throw DomainError("empty batch");
  if (static_cast<std::size_t>(probs.size()) != batch.size())
    throw ShapeError("probability count does not match batch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    total += expected_group_loss(probs(static_cast<Eigen::Index>(i)), marginals, batch.a[i]);
  return total / static_cast<double>(batch.size());
}

std::array<LossEval, kNumComponents> bfarl_components(
    const Eigen::VectorXd& logits, const Dataset& batch,
    const GroupLabelMarginals& marginals) {
  const Eigen::Index n = logits.size();
  if (n == 0) throw DomainError("empty batch");
  if (static_cast<std::size_t>(n) != batch.size())
    throw ShapeError("logit count does not match batch");
  std::array<Eigen::VectorXd, kNumComponents> c_pos, c_neg;
  for (std::size_t k = 0; k < kNumComponents; ++k) {
    c_pos[k] = Eigen::VectorXd::Zero(n);
    c_neg[k] = Eigen::VectorXd::Zero(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    const Group g = batch.a[row];
    check_group(g);
    const bool pos = is_positive(batch.y[row]);
    c_pos[g](i) = pos ? 1.0 : 0.0;
    c_neg[g](i) = pos ? 0.0 : 1.0;
    c_pos[2 + g](i) = marginals.p_pos[g];
    c_neg[2 + g](i) = 1.0 - marginals.p_pos[g];
  }
  std::array<LossEval, kNumComponents> out;
  for (std::size_t k = 0; k < kNumComponents; ++k)
    out[k] = weighted_bce(logits, c_pos[k], c_neg[k]);
  return out;
}

std::array<double, kNumComponents> component_weights(const MetaParams& meta) {
  return {meta.alpha[0], meta.alpha[1], -meta.beta[0], -meta.beta[1]};
}

BatchLoss bfarl_loss(const MetaParams& meta, const GroupLabelMarginals& marginals) {
  return [meta, marginals](const Eigen::VectorXd& logits, const Dataset& batch) {
    const auto parts = bfarl_components(logits, batch, marginals);
    const auto w = component_weights(meta);
    LossEval out;
    out.dlogits = Eigen::VectorXd::Zero(logits.size());
    for (std::size_t k = 0; k < kNumComponents; ++k) {
      out.value += w[k] * parts[k].value;
      out.dlogits += w[k] * parts[k].dlogits;
    }
    return out;
  };
}

double bfarl(const Dataset& batch, const ModelParams& params, const MetaParams& meta,
             const GroupLabelMarginals& marginals) {
  return loss_value(params, batch, bfarl_loss(meta, marginals));
}

}  // namespace bfarl
