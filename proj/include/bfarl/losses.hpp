#pragma once

#include <array>

#include <Eigen/Dense>

#include "bfarl/dataset.hpp"
#include "bfarl/model.hpp"
#include "bfarl/types.hpp"

namespace bfarl {

// Meta-learned scalars: group weights alpha and regularizer intensities beta.
struct MetaParams {
  PerGroup<double> alpha{1.0, 1.0};
  PerGroup<double> beta{0.0, 0.0};

  void validate() const;

  // (alpha0, alpha1, beta0, beta1)
  std::array<double, 4> as_array() const;
  static MetaParams from_array(const std::array<double, 4>& v);

  double beta_norm() const;
};

// Empirical P(Y=+1 | A=a) over the observed training labels.
struct GroupLabelMarginals {
  PerGroup<double> p_pos{0.5, 0.5};
};

GroupLabelMarginals estimate_marginals(const Dataset& ds);

// E_{Y|A=a} bce(p, Y) under the group's label marginal.
double expected_group_loss(double p, const GroupLabelMarginals& marginals, Group a);

// sample_loss - alpha_balance * peer_term.
double peer_loss(double sample_loss, double peer_term, double alpha_balance);

// Batch mean of expected_group_loss(p_i, marginals, a_i): the expectation form
// of the peer term, evaluated at each sample's own features.
double expected_peer_term(const Eigen::VectorXd& probs, const Dataset& batch,
                          const GroupLabelMarginals& marginals);

// The four batch components that B-FARL combines linearly:
//   0: (1/n) sum_{S0} bce_i        1: (1/n) sum_{S1} bce_i
//   2: (1/n) sum_{S0} E-loss_i     3: (1/n) sum_{S1} E-loss_i
// so that L_F = a0*h0 + a1*h1 - b0*h2 - b1*h3.
inline constexpr std::size_t kNumComponents = 4;

std::array<LossEval, kNumComponents> bfarl_components(
    const Eigen::VectorXd& logits, const Dataset& batch,
    const GroupLabelMarginals& marginals);

// Coefficients multiplying each component in L_F.
std::array<double, kNumComponents> component_weights(const MetaParams& meta);

BatchLoss bfarl_loss(const MetaParams& meta, const GroupLabelMarginals& marginals);

// L_F = (1/n)[a0 sum_{S0} bce + a1 sum_{S1} bce
//             - b0 sum_{S0} E0-loss - b1 sum_{S1} E1-loss].
double bfarl(const Dataset& batch, const ModelParams& params, const MetaParams& meta,
             const GroupLabelMarginals& marginals);

}  // namespace bfarl
