#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bfarl/losses.hpp"
#include "support.hpp"

namespace bfarl {
namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// Identity-logit model: row i has the single feature logit(p_i).
ModelParams identity_model() {
  ModelParams m;
  Layer l;
  l.weights = Eigen::MatrixXd::Ones(1, 1);
  l.biases = Eigen::VectorXd::Zero(1);
  m.layers.push_back(l);
  return m;
}

Dataset fixed_prediction_batch(const std::vector<double>& probs, const std::vector<Group>& a,
                               const std::vector<int>& y) {
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(probs.size()), 1);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    ds.features(static_cast<Eigen::Index>(i), 0) = logit(probs[i]);
    ds.y.push_back(label_from_int(y[i]));
  }
  ds.a = a;
  return ds;
}

GroupLabelMarginals marginals(double p0, double p1) {
  GroupLabelMarginals m;
  m.p_pos = {p0, p1};
  return m;
}

TEST(Marginals, Counting) {
  const Dataset ds = fixed_prediction_batch({0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5},
                                            {0, 0, 0, 0, 1, 1, 1, 1},
                                            {1, 1, -1, -1, 1, -1, -1, -1});
  const GroupLabelMarginals m = estimate_marginals(ds);
  EXPECT_DOUBLE_EQ(m.p_pos[0], 0.5);
  EXPECT_DOUBLE_EQ(m.p_pos[1], 0.25);

  const Dataset all_pos = fixed_prediction_batch({0.5, 0.5}, {0, 1}, {1, 1});
  EXPECT_DOUBLE_EQ(estimate_marginals(all_pos).p_pos[0], 1.0);
  EXPECT_DOUBLE_EQ(estimate_marginals(all_pos).p_pos[1], 1.0);
}

TEST(Marginals, EmptyGroupThrows) {
  const Dataset ds = fixed_prediction_batch({0.5, 0.5}, {0, 0}, {1, -1});
  EXPECT_THROW(estimate_marginals(ds), DomainError);
}

TEST(ExpectedGroupLoss, HandValues) {
  EXPECT_NEAR(expected_group_loss(0.8, marginals(0.5, 0.5), 0), 0.916291, 1e-6);
  EXPECT_DOUBLE_EQ(expected_group_loss(0.3, marginals(1.0, 0.0), 0),
                   bce_loss(0.3, Label::positive));
  EXPECT_DOUBLE_EQ(expected_group_loss(0.3, marginals(1.0, 0.0), 1),
                   bce_loss(0.3, Label::negative));
}

TEST(ExpectedGroupLoss, MinimizedAtTheMarginal) {
  for (const double q : {0.1, 0.35, 0.5, 0.8}) {
    const GroupLabelMarginals m = marginals(q, q);
    const double at_q = expected_group_loss(q, m, 0);
    for (double p = 0.01; p < 1.0; p += 0.01) EXPECT_GE(expected_group_loss(p, m, 0), at_q - 1e-15);
  }
}

TEST(PeerLoss, HandValues) {
  EXPECT_DOUBLE_EQ(peer_loss(0.5, 0.9, 0.0), 0.5);
  EXPECT_NEAR(peer_loss(0.223144, 0.916291, 1.0), -0.693147, 1e-6);
}

TEST(PeerLoss, ExpectationFormEqualsPairEnumeration) {
  // Peer pairs draw x from one row and y from another row of the same group,
  // so the labels come from that group's empirical marginal.
  const std::vector<double> p{0.8, 0.6, 0.3, 0.9, 0.45};
  const Dataset ds = fixed_prediction_batch(p, {0, 0, 1, 1, 0}, {1, -1, -1, 1, 1});
  const GroupLabelMarginals m = estimate_marginals(ds);
  Eigen::VectorXd probs(5);
  for (int i = 0; i < 5; ++i) probs(i) = p[static_cast<std::size_t>(i)];

  double total = 0.0;
  for (std::size_t i1 = 0; i1 < 5; ++i1) {
    double group_sum = 0.0;
    std::size_t group_rows = 0;
    for (std::size_t i2 = 0; i2 < 5; ++i2) {
      if (ds.a[i2] != ds.a[i1]) continue;
      group_sum += bce_loss(p[i1], ds.y[i2]);
      ++group_rows;
    }
    total += group_sum / static_cast<double>(group_rows);
  }
  EXPECT_NEAR(expected_peer_term(probs, ds, m), total / 5.0, 1e-12);
}

TEST(Bfarl, UnitAlphaZeroBetaIsMeanBce) {
  const Dataset ds = testing::random_dataset(12, 3, 4);
  const std::vector<std::size_t> hidden{5};
  const ModelParams p = make_model(3, hidden, Activation::relu, 2);
  const GroupLabelMarginals m = estimate_marginals(ds);
  EXPECT_NEAR(bfarl(ds, p, MetaParams{}, m), loss_value(p, ds, mean_bce()), 1e-14);
  const auto g1 = grad(p, ds, bfarl_loss(MetaParams{}, m)).flatten();
  const auto g2 = grad(p, ds, mean_bce()).flatten();
  for (std::size_t i = 0; i < g1.size(); ++i) EXPECT_NEAR(g1[i], g2[i], 1e-15);
}

TEST(Bfarl, SingleGroupBatchIgnoresOtherGroupMeta) {
  const Dataset ds = fixed_prediction_batch({0.8, 0.6, 0.3}, {0, 0, 0}, {1, -1, 1});
  const GroupLabelMarginals m = marginals(0.4, 0.7);
  MetaParams a, b;
  a.beta = {0.3, 0.0};
  b = a;
  b.alpha[1] = 5.0;
  b.beta[1] = -2.0;
  EXPECT_DOUBLE_EQ(bfarl(ds, identity_model(), a, m), bfarl(ds, identity_model(), b, m));
}

TEST(Bfarl, ToyBatchTermByTerm) {
  const std::vector<double> p{0.8, 0.6, 0.3, 0.9};
  const Dataset ds = fixed_prediction_batch(p, {0, 0, 1, 1}, {1, -1, -1, 1});
  const GroupLabelMarginals m = marginals(0.5, 0.5);
  MetaParams meta;
  meta.beta = {0.5, 0.5};

  double expected = 0.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const Group g = ds.a[i];
    expected += meta.alpha[g] * bce_loss(p[i], ds.y[i]);
    expected -= meta.beta[g] * (0.5 * bce_loss(p[i], Label::positive) +
                                0.5 * bce_loss(p[i], Label::negative));
  }
  expected /= 4.0;
  EXPECT_NEAR(bfarl(ds, identity_model(), meta, m), expected, 1e-12);
}

TEST(Bfarl, LinearInEachMetaParameter) {
  const Dataset ds = testing::random_dataset(10, 2, 8);
  const std::vector<std::size_t> hidden{3};
  const ModelParams p = make_model(2, hidden, Activation::sigmoid, 1);
  const GroupLabelMarginals m = estimate_marginals(ds);
  const MetaParams base = MetaParams::from_array({0.7, 1.3, 0.2, -0.4});
  for (std::size_t k = 0; k < 4; ++k) {
    auto at = [&](double t) {
      auto v = base.as_array();
      v[k] += t;
      return bfarl(ds, p, MetaParams::from_array(v), m);
    };
    EXPECT_NEAR(at(0.5) - at(0.0), at(1.0) - at(0.5), 1e-12) << "component " << k;
  }
}

TEST(Bfarl, GradientMatchesCentralDifferences) {
  const Dataset ds = testing::random_dataset(9, 4, 21);
  const std::vector<std::size_t> hidden{6};
  const ModelParams p = make_model(4, hidden, Activation::relu, 3);
  const BatchLoss loss =
      bfarl_loss(MetaParams::from_array({0.9, 1.2, 0.3, 0.6}), estimate_marginals(ds));
  const auto analytic = grad(p, ds, loss).flatten();
  const auto numeric = testing::numeric_grad(p, ds, loss, 1e-5);
  for (std::size_t i = 0; i < analytic.size(); ++i)
    EXPECT_LT(testing::rel_error(analytic[i], numeric[i]), 1e-5) << i;
}

TEST(MetaParams, Validation) {
  EXPECT_THROW(MetaParams::from_array({-0.1, 1, 0, 0}).validate(), DomainError);
  EXPECT_NO_THROW(MetaParams::from_array({0, 1, -3, 2}).validate());
  EXPECT_DOUBLE_EQ(MetaParams::from_array({1, 1, 3, 4}).beta_norm(), 5.0);
}

}  // namespace
}  // namespace bfarl
