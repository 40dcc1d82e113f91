#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "bfarl/dataset.hpp"
#include "bfarl/model.hpp"
#include "bfarl/types.hpp"

namespace bfarl {

struct MetricsReport {
  double f1_weighted_macro = 0.0;
  double deo = 0.0;
  double p_percent = 0.0;
  double subgroup_risk_gap = 0.0;
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  std::size_t split_id = 0;
};

// |TPR(A=1) - TPR(A=0)|. Throws DomainError naming the group when a group has
// no positive true labels.
double deo(std::span<const Label> pred, std::span<const Label> truth,
           std::span<const Group> groups);

// min of the two ratios of group positive-prediction rates. 1 when both rates
// are zero, 0 when exactly one is.
double p_percent(std::span<const Label> pred, std::span<const Group> groups);

// Support-weighted mean of per-class F1 over {-1, +1}.
double weighted_macro_f1(std::span<const Label> pred, std::span<const Label> truth);

using SampleLoss = std::function<double(double p, Label y)>;

// |mean loss over A=0 - mean loss over A=1| of the model on `ds` (labels y).
double subgroup_risk_gap(const ModelParams& params, const Dataset& ds,
                         const SampleLoss& loss = bce_loss);

// What evaluate() does when a test group has no positive clean labels.
enum class UndefinedDeo {
  raise,       // propagate the DomainError from deo()
  record_nan,  // report deo as NaN and keep the other metrics
};

// Scores `params` on `test` against its clean labels.
MetricsReport evaluate(const ModelParams& params, const Dataset& test,
                       std::uint64_t seed = 0, std::size_t split_id = 0,
                       UndefinedDeo on_undefined = UndefinedDeo::raise);

}  // namespace bfarl
