#include "bfarl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace bfarl {

namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": length mismatch");
}

}  // namespace

double deo(std::span<const Label> pred, std::span<const Label> truth,
           std::span<const Group> groups) {
  check_lengths(pred.size(), truth.size(), "deo");
  check_lengths(pred.size(), groups.size(), "deo");
  PerGroup<std::size_t> positives{0, 0}, hits{0, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    check_group(groups[i]);
    if (!is_positive(truth[i])) continue;
    ++positives[groups[i]];
    if (is_positive(pred[i])) ++hits[groups[i]];
  }
  PerGroup<double> tpr{};
  for (int g = 0; g < kNumGroups; ++g) {
    if (positives[g] == 0)
      throw DomainError("DEO undefined: group " + std::to_string(g) +
                        " has no positive labels");
    tpr[g] = static_cast<double>(hits[g]) / static_cast<double>(positives[g]);
  }
  return std::abs(tpr[1] - tpr[0]);
}

double p_percent(std::span<const Label> pred, std::span<const Group> groups) {
  check_lengths(pred.size(), groups.size(), "p_percent");
  PerGroup<std::size_t> rows{0, 0}, pos{0, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    check_group(groups[i]);
    ++rows[groups[i]];
    if (is_positive(pred[i])) ++pos[groups[i]];
  }
  PerGroup<double> rate{};
  for (int g = 0; g < kNumGroups; ++g)
    rate[g] = rows[g] == 0 ? 0.0
                           : static_cast<double>(pos[g]) / static_cast<double>(rows[g]);
  if (rate[0] == 0.0 && rate[1] == 0.0) return 1.0;
  if (rate[0] == 0.0 || rate[1] == 0.0) return 0.0;
  return std::min(rate[0] / rate[1], rate[1] / rate[0]);
}

double weighted_macro_f1(std::span<const Label> pred, std::span<const Label> truth) {
  check_lengths(pred.size(), truth.size(), "weighted_macro_f1");
  if (pred.empty()) throw DomainError("weighted_macro_f1 needs at least one row");
  double total = 0.0;
  for (const Label cls : {Label::negative, Label::positive}) {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const bool t = truth[i] == cls;
      const bool p = pred[i] == cls;
      support += t ? 1 : 0;
      if (t && p) ++tp;
      else if (p) ++fp;
      else if (t) ++fn;
    }
    const std::size_t denom = 2 * tp + fp + fn;
    const double f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    total += static_cast<double>(support) * f1;
  }
  return total / static_cast<double>(pred.size());
}

double subgroup_risk_gap(const ModelParams& params, const Dataset& ds,
                         const SampleLoss& loss) {
  const Eigen::VectorXd p = predict_proba(params, ds.features);
  PerGroup<double> sum{0.0, 0.0};
  PerGroup<std::size_t> rows{0, 0};
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Group g = ds.a[i];
    check_group(g);
    sum[g] += loss(p(static_cast<Eigen::Index>(i)), ds.y[i]);
    ++rows[g];
  }
  for (int g = 0; g < kNumGroups; ++g)
    if (rows[g] == 0)
      throw DomainError("subgroup risk undefined: group " + std::to_string(g) + " is empty");
  return std::abs(sum[0] / static_cast<double>(rows[0]) -
                  sum[1] / static_cast<double>(rows[1]));
}

MetricsReport evaluate(const ModelParams& params, const Dataset& test, std::uint64_t seed,
                       std::size_t split_id, UndefinedDeo on_undefined) {
  if (test.size() == 0) throw DomainError("cannot evaluate on an empty test set");
  const std::vector<Label>& truth = test.clean_labels();
  const std::vector<Label> pred = predict_labels(params, test.features);
  Dataset scored = test;
  scored.y = truth;
  MetricsReport r;
  r.f1_weighted_macro = weighted_macro_f1(pred, truth);
  try {
    r.deo = deo(pred, truth, test.a);
  } catch (const DomainError&) {
    if (on_undefined == UndefinedDeo::raise) throw;
    r.deo = std::numeric_limits<double>::quiet_NaN();
  }
  r.p_percent = p_percent(pred, test.a);
  r.subgroup_risk_gap = subgroup_risk_gap(params, scored);
  r.n_test = test.size();
  r.seed = seed;
  r.split_id = split_id;
  return r;
}

}  // namespace bfarl
