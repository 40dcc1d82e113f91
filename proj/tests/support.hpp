#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bfarl/dataset.hpp"
#include "bfarl/model.hpp"
#include "bfarl/random.hpp"

namespace bfarl::testing {

// Random dense dataset with both groups present.
inline Dataset random_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i)
    for (Eigen::Index j = 0; j < ds.features.cols(); ++j) ds.features(i, j) = normal(rng);
  for (std::size_t i = 0; i < n; ++i) {
    ds.y.push_back(coin(rng) ? Label::positive : Label::negative);
    ds.a.push_back(i % 3 == 0 ? 1 : 0);
  }
  return ds;
}

// Relative error used by every finite-difference comparison.
inline double rel_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({1e-8, std::abs(analytic), std::abs(numeric)});
}

// Central differences of `loss` over every flattened parameter.
inline std::vector<double> numeric_grad(const ModelParams& params, const Dataset& batch,
                                        const BatchLoss& loss, double h) {
  std::vector<double> flat = params.flatten();
  std::vector<double> out(flat.size());
  ModelParams probe = params;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + h;
    probe.assign_flat(flat);
    const double up = loss_value(probe, batch, loss);
    flat[i] = saved - h;
    probe.assign_flat(flat);
    const double down = loss_value(probe, batch, loss);
    flat[i] = saved;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

}  // namespace bfarl::testing
