#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "bfarl/dataset.hpp"

namespace bfarl {

// Sparse-Bernoulli synthetic generator with a random linear labeler.
struct SyntheticConfig {
  std::size_t n = 2000;
  std::size_t k = 15;          // feature dimension, also dim of w_gen
  double a_rate = 0.1;         // P(A = 1)
  double rarity = 0.5;         // feature j is on with prob (1/(j+1))^rarity
  double flip_amount = 0.5;    // flip prob on rows where z (0/1 coded) == a
  double w_sigma = 1.0;        // w_gen ~ N(0, w_sigma * I)
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  Dataset data;             // y observed, z clean
  Eigen::VectorXd w_gen;
};

// Feature k-1 is a constant 1 intercept; the rest are Bernoulli.
// z = +1 iff w_gen . x > 0.
SyntheticData generate(const SyntheticConfig& config);

}  // namespace bfarl
