#include <gtest/gtest.h>

#include <cmath>

#include "bfarl/synthetic.hpp"

namespace bfarl {
namespace {

TEST(Synthetic, DefaultConfigShape) {
  SyntheticConfig cfg;
  cfg.seed = 11;
  const SyntheticData s = generate(cfg);
  EXPECT_EQ(s.data.size(), 2000u);
  EXPECT_EQ(s.data.dim(), 15u);
  const auto counts = s.data.group_counts();
  EXPECT_NEAR(counts[1] / 2000.0, 0.1, 4.0 * std::sqrt(0.1 * 0.9 / 2000.0));
}

TEST(Synthetic, FeatureRatesFollowRarity) {
  SyntheticConfig cfg;
  cfg.seed = 5;
  const SyntheticData s = generate(cfg);
  const double rate = s.data.features.col(1).mean();
  const double p = std::pow(0.5, 0.5);
  EXPECT_NEAR(rate, p, 4.0 * std::sqrt(p * (1 - p) / 2000.0));
  EXPECT_TRUE((s.data.features.col(14).array() == 1.0).all());
  EXPECT_TRUE((s.data.features.col(0).array() == 1.0).all());
}

TEST(Synthetic, NoFlipMeansObservedEqualsClean) {
  SyntheticConfig cfg;
  cfg.flip_amount = 0.0;
  cfg.seed = 2;
  const SyntheticData s = generate(cfg);
  EXPECT_EQ(s.data.y, *s.data.z);
}

TEST(Synthetic, FlipsOnlyWhereCleanLabelMatchesGroup) {
  SyntheticConfig cfg;
  cfg.seed = 3;
  cfg.a_rate = 0.5;
  const SyntheticData s = generate(cfg);
  std::size_t flips = 0;
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    const Label z = (*s.data.z)[i];
    const int z01 = is_positive(z) ? 1 : 0;
    if (z01 != s.data.a[i]) {
      EXPECT_EQ(s.data.y[i], z);
    }
    flips += s.data.y[i] != z;
  }
  EXPECT_GT(flips, 0u);
}

TEST(Synthetic, CleanLabelsAreLinearlySeparable) {
  SyntheticConfig cfg;
  cfg.seed = 8;
  const SyntheticData s = generate(cfg);
  const Eigen::VectorXd score = s.data.features * s.w_gen;
  for (std::size_t i = 0; i < s.data.size(); ++i)
    EXPECT_EQ(score(static_cast<Eigen::Index>(i)) > 0.0, is_positive((*s.data.z)[i]));

  // A perceptron reaches zero training errors on (X, Z).
  Eigen::VectorXd w = Eigen::VectorXd::Zero(15);
  bool clean_pass = false;
  for (int epoch = 0; epoch < 5000 && !clean_pass; ++epoch) {
    clean_pass = true;
    for (Eigen::Index i = 0; i < s.data.features.rows(); ++i) {
      const double yi = to_int((*s.data.z)[static_cast<std::size_t>(i)]);
      const double m = yi * s.data.features.row(i).dot(w);
      if (m <= 0.0) {
        w += yi * s.data.features.row(i).transpose();
        clean_pass = false;
      }
    }
  }
  EXPECT_TRUE(clean_pass);
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  SyntheticConfig cfg;
  cfg.seed = 99;
  const SyntheticData a = generate(cfg), b = generate(cfg);
  EXPECT_TRUE(a.data.features == b.data.features);
  EXPECT_EQ(a.data.y, b.data.y);
  EXPECT_EQ(a.data.a, b.data.a);
  EXPECT_TRUE(a.w_gen == b.w_gen);
}

TEST(Synthetic, RejectsBadConfig) {
  SyntheticConfig cfg;
  cfg.a_rate = 1.5;
  EXPECT_THROW(generate(cfg), ConfigError);
}

}  // namespace
}  // namespace bfarl
