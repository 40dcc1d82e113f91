#pragma once

#include <cstddef>
#include <cstdint>

#include "bfarl/dataset.hpp"
#include "bfarl/types.hpp"

namespace bfarl {

// Group-conditional flip rates and selection parameters.
//
// theta_plus[a]  = P(Y=+1 | Z=-1, A=a)
// theta_minus[a] = P(Y=-1 | Z=+1, A=a)
//
// sigma >= 1 shrinks the positive proportion r of the targeted group to r/sigma
// (sigma == 1 means no selection bias).
struct BiasSpec {
  PerGroup<double> theta_plus{0.0, 0.0};
  PerGroup<double> theta_minus{0.0, 0.0};
  double sigma = 1.0;
  double r = 0.5;
  Group selection_group = 0;

  // Rates in [0,1], sigma >= 1, r in (0,1). The per-group condition
  // theta+ + theta- < 1 is only required where delta is needed.
  void validate() const;

  // Four-rate layout used by configs and reports: (0+, 0-, 1+, 1-).
  static BiasSpec from_rates(double t0_plus, double t0_minus, double t1_plus,
                             double t1_minus, double sigma = 1.0, double r = 0.5);

  // Labels flip with theta_minus on positives and theta_plus on negatives.
  double flip_probability(Label clean, Group a) const;

  double mean_rate() const;
};

// delta_a = 1 / (1 - theta_a^+ - theta_a^-).
double delta_factor(const BiasSpec& spec, Group a);

// Label-bias rate theta that, after selection with (sigma, r), yields the
// combined rate epsilon: theta = ((sigma-r)/(1-r)) eps + (1-sigma)/(1-r).
double theta_from_epsilon(double epsilon, double sigma, double r);
double epsilon_from_theta(double theta, double sigma, double r);

// Flips each label independently given (Z, A). Requires `clean.z`; the result
// carries the untouched z and features with the observed labels in y.
Dataset inject_label_bias(const Dataset& clean, const BiasSpec& spec,
                          std::uint64_t seed);

// Smallest number of positives to drop from a group of `group_size` rows with
// `positives` positives so the positive proportion is <= r/sigma, r being the
// current proportion.
std::size_t selection_removal_count(std::size_t positives, std::size_t group_size,
                                    double sigma);

// Uniformly removes positive-labeled (by y) rows of `group` down to r/sigma.
// The removal count is recorded in provenance.selection_removed.
Dataset inject_selection_bias(const Dataset& ds, double sigma, std::uint64_t seed,
                              Group group = 0);

}  // namespace bfarl
