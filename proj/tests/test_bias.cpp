#include <gtest/gtest.h>

#include <cmath>

#include "bfarl/bias.hpp"

namespace bfarl {
namespace {

Dataset labeled_rows(std::size_t n, Label z, Group a) {
  Dataset ds;
  ds.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), 1);
  ds.y.assign(n, z);
  ds.a.assign(n, a);
  ds.z = ds.y;
  return ds;
}

Dataset selection_fixture() {
  // Group 0: 1000 rows, 500 positive. Group 1: 200 rows, 100 positive.
  Dataset ds;
  ds.features = Eigen::MatrixXd::Zero(1200, 1);
  for (std::size_t i = 0; i < 1200; ++i) {
    ds.a.push_back(i < 1000 ? 0 : 1);
    ds.y.push_back(i % 2 == 0 ? Label::positive : Label::negative);
    ds.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
  }
  return ds;
}

TEST(DeltaFactor, HandValues) {
  EXPECT_DOUBLE_EQ(delta_factor(BiasSpec{}, 0), 1.0);
  const BiasSpec case2 = BiasSpec::from_rates(0.25, 0.05, 0.05, 0.25);
  EXPECT_NEAR(delta_factor(case2, 0), 1.428571, 1e-6);
  EXPECT_THROW(delta_factor(BiasSpec::from_rates(0.6, 0.4, 0, 0), 0), DomainError);
}

TEST(BiasSpec, RejectsOutOfRangeValues) {
  EXPECT_THROW(BiasSpec::from_rates(1.2, 0, 0, 0), DomainError);
  EXPECT_THROW(BiasSpec::from_rates(0, 0, 0, 0, 0.9), DomainError);
  EXPECT_THROW(BiasSpec::from_rates(0, 0, 0, 0, 1.1, 1.0), DomainError);
}

TEST(RateConversion, HandValues) {
  EXPECT_NEAR(theta_from_epsilon(0.25, 1.1, 0.3), 0.142857, 1e-6);
  EXPECT_NEAR(epsilon_from_theta(theta_from_epsilon(0.25, 1.1, 0.3), 1.1, 0.3), 0.25, 1e-12);
  EXPECT_NEAR(theta_from_epsilon(1.0, 1.07, 0.4), 1.0, 1e-15);
  EXPECT_NEAR(epsilon_from_theta(1.0, 1.07, 0.4), 1.0, 1e-15);
}

TEST(RateConversion, SigmaOneIsExactIdentity) {
  for (double e = 0.0; e <= 1.0; e += 0.0625)
    for (const double r : {0.1, 0.5, 0.9}) {
      EXPECT_EQ(theta_from_epsilon(e, 1.0, r), e);
      EXPECT_EQ(epsilon_from_theta(e, 1.0, r), e);
    }
}

TEST(RateConversion, RoundTripOverGrid) {
  std::size_t checked = 0;
  for (int ei = 0; ei <= 10; ++ei)
    for (const double sigma : {1.0, 1.05, 1.1})
      for (int ri = 1; ri <= 9; ++ri) {
        const double eps = ei / 10.0, r = ri / 10.0;
        double theta = 0.0;
        try {
          theta = theta_from_epsilon(eps, sigma, r);
        } catch (const DomainError&) {
          continue;
        }
        EXPECT_NEAR(epsilon_from_theta(theta, sigma, r), eps, 1e-12);
        ++checked;
      }
  EXPECT_GT(checked, 250u);
}

TEST(LabelBias, ZeroRatesKeepLabels) {
  Dataset ds = selection_fixture();
  ds.z = ds.y;
  const Dataset out = inject_label_bias(ds, BiasSpec{}, 3);
  EXPECT_EQ(out.y, *ds.z);
}

TEST(LabelBias, FlipFractionWithinBinomialBand) {
  const Dataset ds = labeled_rows(10000, Label::positive, 1);
  const Dataset out = inject_label_bias(ds, BiasSpec::from_rates(0, 0, 0, 0.25), 42);
  std::size_t flips = 0;
  for (const Label y : out.y) flips += y == Label::negative;
  const double frac = static_cast<double>(flips) / 10000.0;
  EXPECT_NEAR(frac, 0.25, 3.0 * std::sqrt(0.25 * 0.75 / 10000.0));
}

TEST(LabelBias, OtherGroupRatesDoNotTouchGroupZero) {
  Dataset ds = labeled_rows(5000, Label::positive, 0);
  const Dataset a = inject_label_bias(ds, BiasSpec::from_rates(0.1, 0.2, 0.0, 0.0), 9);
  const Dataset b = inject_label_bias(ds, BiasSpec::from_rates(0.1, 0.2, 0.7, 0.6), 9);
  EXPECT_EQ(a.y, b.y);
}

TEST(LabelBias, PreservesEverythingButY) {
  Dataset ds = selection_fixture();
  ds.z = ds.y;
  const Dataset out = inject_label_bias(ds, BiasSpec::from_rates(0.3, 0.2, 0.1, 0.4), 5);
  EXPECT_EQ(out.size(), ds.size());
  EXPECT_TRUE(out.features == ds.features);
  EXPECT_EQ(out.a, ds.a);
  EXPECT_EQ(*out.z, *ds.z);
  EXPECT_NE(out.y, ds.y);
}

TEST(LabelBias, RequiresCleanLabels) {
  const Dataset ds = selection_fixture();
  EXPECT_THROW(inject_label_bias(ds, BiasSpec{}, 1), DomainError);
}

TEST(LabelBias, EmpiricalRatesConvergeForEveryCell) {
  const BiasSpec spec = BiasSpec::from_rates(0.3, 0.15, 0.05, 0.4);
  for (const Group a : {0, 1})
    for (const Label z : {Label::positive, Label::negative}) {
      const Dataset out = inject_label_bias(labeled_rows(20000, z, a), spec, 77 + a);
      std::size_t flips = 0;
      for (const Label y : out.y) flips += y != z;
      const double p = spec.flip_probability(z, a);
      EXPECT_NEAR(static_cast<double>(flips) / 20000.0, p, 4.0 * std::sqrt(p * (1 - p) / 20000.0));
    }
}

TEST(SelectionBias, RemovalCountExample) {
  EXPECT_EQ(selection_removal_count(500, 1000, 1.1), 84u);
  EXPECT_EQ(selection_removal_count(500, 1000, 1.0), 0u);
  EXPECT_EQ(selection_removal_count(0, 1000, 1.5), 0u);
}

TEST(SelectionBias, RemovalCountIsSmallestFeasible) {
  for (std::size_t n = 1; n <= 60; ++n)
    for (std::size_t p = 1; p <= n; ++p)
      for (const double sigma : {1.01, 1.05, 1.1, 2.0}) {
        const std::size_t k = selection_removal_count(p, n, sigma);
        const double target = static_cast<double>(p) / (static_cast<double>(n) * sigma);
        auto prop = [&](std::size_t kk) {
          // Removing a whole all-positive group leaves proportion 0.
          return kk == n ? 0.0 : static_cast<double>(p - kk) / static_cast<double>(n - kk);
        };
        EXPECT_LE(prop(k), target + 1e-12);
        if (k > 0) {
          EXPECT_GT(prop(k - 1), target - 1e-12);
        }
      }
}

TEST(SelectionBias, RemovesOnlyTargetedPositives) {
  const Dataset ds = selection_fixture();
  const Dataset out = inject_selection_bias(ds, 1.1, 3, 0);
  EXPECT_EQ(out.provenance.selection_removed, 84u);
  EXPECT_EQ(out.size(), ds.size() - 84);
  PerGroup<std::size_t> pos{0, 0}, neg{0, 0};
  for (std::size_t i = 0; i < out.size(); ++i)
    ++(is_positive(out.y[i]) ? pos : neg)[static_cast<std::size_t>(out.a[i])];
  EXPECT_EQ(pos[0], 416u);
  EXPECT_EQ(neg[0], 500u);
  EXPECT_EQ(pos[1], 100u);
  EXPECT_EQ(neg[1], 100u);
}

TEST(SelectionBias, SigmaOneLeavesDataUnchanged) {
  const Dataset ds = selection_fixture();
  const Dataset out = inject_selection_bias(ds, 1.0, 3);
  EXPECT_EQ(out.y, ds.y);
  EXPECT_TRUE(out.features == ds.features);
  EXPECT_EQ(out.provenance.selection_removed, 0u);
}

TEST(SelectionBias, GroupWithoutPositivesUnchanged) {
  const Dataset ds = labeled_rows(50, Label::negative, 0);
  EXPECT_EQ(inject_selection_bias(ds, 1.5, 1).size(), 50u);
}

TEST(SelectionBias, AllPositiveGroupIsRejected) {
  const Dataset ds = labeled_rows(50, Label::positive, 0);
  EXPECT_THROW(inject_selection_bias(ds, 1.1, 1), DomainError);
  EXPECT_EQ(inject_selection_bias(ds, 1.0, 1).size(), 50u);
}

TEST(SelectionBias, SameSeedSameRows) {
  const Dataset ds = selection_fixture();
  EXPECT_TRUE(inject_selection_bias(ds, 1.1, 8).features ==
              inject_selection_bias(ds, 1.1, 8).features);
}

}  // namespace
}  // namespace bfarl
