#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bfarl/oracle.hpp"

namespace bfarl {
namespace {

DiscreteWorld four_point_world() {
  DiscreteWorld w;
  w.xz_prob = {{0.10, 0.15}, {0.20, 0.05}, {0.05, 0.20}, {0.15, 0.10}};
  w.classifier = {0.3, 0.2, 0.85, 0.6};
  w.p_a1 = 0.4;
  w.bias = BiasSpec::from_rates(0.2, 0.1, 0.1, 0.3);
  return w;
}

MetaParams beta_only(double b0, double b1) {
  MetaParams m;
  m.beta = {b0, b1};
  return m;
}

TEST(Decomposition, FourPointWorldMatches) {
  const DiscreteWorld w = four_point_world();
  const MetaParams meta = beta_only(0.3, 0.2);
  for (const double lambda : {0.0, 0.05, 0.4, 1.5}) {
    const auto rho = consistent_rho(w, meta, lambda);
    const VerifyResult r = verify_decomposition(w, meta, rho[0], rho[1], 1e-8);
    EXPECT_TRUE(r.holds) << "lambda " << lambda << " residual " << r.residual;
    EXPECT_NEAR(std::abs(meta.beta[0] - rho[0]), std::abs(rho[1] - meta.beta[1]), 1e-15);
  }
}

TEST(Decomposition, NoiseFreeUnregularizedEqualsCleanLoss) {
  DiscreteWorld w = four_point_world();
  w.bias = BiasSpec{};
  const MetaParams meta;
  EXPECT_NEAR(lhs_expected_bfarl(w, meta), clean_expected_loss(w), 1e-15);
  const Decomposition d = rhs_decomposition(w, meta, 0.0, 0.0);
  EXPECT_EQ(d.fairness, 0.0);
  EXPECT_NEAR(d.bias, 0.0, 1e-15);
  EXPECT_NEAR(d.total(), clean_expected_loss(w), 1e-15);
}

TEST(Decomposition, FairPredictorHasZeroFairnessTerm) {
  DiscreteWorld w = four_point_world();
  w.p_a1 = 0.5;
  w.bias = BiasSpec::from_rates(0.2, 0.1, 0.2, 0.1);
  const PerGroup<double> risks = group_risks(w);
  EXPECT_NEAR(risks[0], risks[1], 1e-15);
  const MetaParams meta = beta_only(0.3, 0.2);
  const auto rho = consistent_rho(w, meta, 0.7);
  EXPECT_EQ(rhs_decomposition(w, meta, rho[0], rho[1]).fairness, 0.0);
}

TEST(Decomposition, PerturbedCouplingIsDetected) {
  const DiscreteWorld w = four_point_world();
  const MetaParams meta = beta_only(0.3, 0.2);
  const auto rho = consistent_rho(w, meta, 0.1);
  CouplingMatrix u = coupling_matrix(w);
  const double exact = rhs_decomposition(w, meta, rho[0], rho[1], u).total();
  u[0][1][0] += 1e-3;
  u[1][0][0] += 1e-3;
  const double perturbed = rhs_decomposition(w, meta, rho[0], rho[1], u).total();
  EXPECT_GT(std::abs(lhs_expected_bfarl(w, meta) - perturbed), 1e-4);
  EXPECT_LT(std::abs(lhs_expected_bfarl(w, meta) - exact), 1e-8);
}

TEST(Decomposition, SingleGroupWorldIsRejected) {
  DiscreteWorld w = four_point_world();
  w.p_a1 = 0.0;
  EXPECT_THROW(lhs_expected_bfarl(w, MetaParams{}), DomainError);
  EXPECT_THROW(rhs_decomposition(w, MetaParams{}, 0.0, 0.0), DomainError);
}

TEST(Decomposition, InconsistentRhoIsRejected) {
  const DiscreteWorld w = four_point_world();
  const MetaParams meta = beta_only(0.3, 0.2);
  EXPECT_THROW(rhs_decomposition(w, meta, 0.5, 0.5), DomainError);
  const auto rho = consistent_rho(w, meta, 0.2);
  const double flipped_a = 2 * meta.beta[0] - rho[0];
  const double flipped_b = 2 * meta.beta[1] - rho[1];
  EXPECT_THROW(rhs_decomposition(w, meta, flipped_a, flipped_b), DomainError);
}

TEST(Decomposition, GroupSwapSymmetry) {
  DiscreteWorld w;
  w.xz_prob = {{0.3, 0.2}, {0.2, 0.3}};
  w.classifier = {0.5, 0.5};
  w.p_a1 = 0.5;
  w.bias = BiasSpec::from_rates(0.2, 0.1, 0.1, 0.2);
  DiscreteWorld swapped = w;
  swapped.bias = BiasSpec::from_rates(0.1, 0.2, 0.2, 0.1);
  const MetaParams meta = beta_only(0.4, 0.1);
  EXPECT_NEAR(lhs_expected_bfarl(w, meta), lhs_expected_bfarl(swapped, beta_only(0.1, 0.4)), 1e-15);
}

TEST(Decomposition, InvariantToFeaturePointOrder) {
  const DiscreteWorld w = four_point_world();
  DiscreteWorld p = w;
  std::reverse(p.xz_prob.begin(), p.xz_prob.end());
  std::reverse(p.classifier.begin(), p.classifier.end());
  const MetaParams meta = beta_only(-0.2, 0.6);
  const auto rho = consistent_rho(w, meta, 0.3);
  EXPECT_NEAR(lhs_expected_bfarl(w, meta), lhs_expected_bfarl(p, meta), 1e-14);
  EXPECT_NEAR(rhs_decomposition(w, meta, rho[0], rho[1]).total(),
              rhs_decomposition(p, meta, rho[0], rho[1]).total(), 1e-14);
}

TEST(Decomposition, BiasTermVanishesWithoutNoiseOrGamma) {
  Rng rng(17);
  for (int i = 0; i < 50; ++i) {
    DiscreteWorld w = random_world(rng, 1 + static_cast<std::size_t>(i % 6));
    w.bias = BiasSpec{};
    EXPECT_NEAR(rhs_decomposition(w, MetaParams{}, 0.0, 0.0).bias, 0.0, 1e-15);
  }
}

TEST(Decomposition, RandomWorldSuite) {
  const OracleSummary s = check_decomposition_suite(200, 99, 1e-8);
  EXPECT_EQ(s.worlds, 200u);
  EXPECT_EQ(s.failures, 0u);
  EXPECT_LT(s.max_residual, 1e-10);
}

TEST(Decomposition, ZeroOneLossWorlds) {
  Rng rng(3);
  for (int i = 0; i < 30; ++i) {
    const DiscreteWorld w = random_world(rng, 4, LossKind::zero_one);
    const MetaParams meta = beta_only(0.5, -0.25);
    const auto rho = consistent_rho(w, meta, 0.2);
    EXPECT_TRUE(verify_decomposition(w, meta, rho[0], rho[1], 1e-8).holds);
  }
}

}  // namespace
}  // namespace bfarl
