#include "bfarl/bias.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bfarl/random.hpp"

namespace bfarl {

namespace {

void check_rate(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw DomainError(std::string(name) + " must lie in [0,1], got " + std::to_string(v));
}

void check_selection(double sigma, double r) {
  if (!(sigma >= 1.0) || !std::isfinite(sigma))
    throw DomainError("sigma must be >= 1, got " + std::to_string(sigma));
  if (!(r > 0.0 && r < 1.0))
    throw DomainError("r must lie in (0,1), got " + std::to_string(r));
}

}  // namespace

void BiasSpec::validate() const {
  for (int g = 0; g < kNumGroups; ++g) {
    check_rate(theta_plus[g], "theta+");
    check_rate(theta_minus[g], "theta-");
  }
  check_selection(sigma, r);
  check_group(selection_group);
}

BiasSpec BiasSpec::from_rates(double t0_plus, double t0_minus, double t1_plus,
                              double t1_minus, double sigma, double r) {
  BiasSpec spec;
  spec.theta_plus = {t0_plus, t1_plus};
  spec.theta_minus = {t0_minus, t1_minus};
  spec.sigma = sigma;
  spec.r = r;
  spec.validate();
  return spec;
}

double BiasSpec::flip_probability(Label clean, Group a) const {
  check_group(a);
  // A clean positive is observed negative with theta-, a clean negative is
  // observed positive with theta+.
  return is_positive(clean) ? theta_minus[a] : theta_plus[a];
}

double BiasSpec::mean_rate() const {
  return (theta_plus[0] + theta_minus[0] + theta_plus[1] + theta_minus[1]) / 4.0;
}

double delta_factor(const BiasSpec& spec, Group a) {
  check_group(a);
  const double sum = spec.theta_plus[a] + spec.theta_minus[a];
  if (!(sum < 1.0))
    throw DomainError("theta+ + theta- must be < 1 for group " + std::to_string(a) +
                      ", got " + std::to_string(sum));
  return 1.0 / (1.0 - sum);
}

double theta_from_epsilon(double epsilon, double sigma, double r) {
  check_rate(epsilon, "epsilon");
  check_selection(sigma, r);
  if (sigma == 1.0) return epsilon;
  const double theta = (sigma - r) / (1.0 - r) * epsilon + (1.0 - sigma) / (1.0 - r);
  if (!(theta >= 0.0 && theta <= 1.0))
    throw DomainError("inconsistent bias settings: theta = " + std::to_string(theta) +
                      " for epsilon = " + std::to_string(epsilon));
  return theta;
}

double epsilon_from_theta(double theta, double sigma, double r) {
  check_rate(theta, "theta");
  check_selection(sigma, r);
  if (sigma == 1.0) return theta;
  const double epsilon = (theta * (1.0 - r) + (sigma - 1.0)) / (sigma - r);
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw DomainError("inconsistent bias settings: epsilon = " + std::to_string(epsilon) +
                      " for theta = " + std::to_string(theta));
  return epsilon;
}

Dataset inject_label_bias(const Dataset& clean, const BiasSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (!clean.z) throw DomainError("label bias injection needs clean labels z");
  clean.validate();
  Dataset out = clean;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<Label>& z = *clean.z;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    // One draw per row regardless of outcome keeps rows' streams aligned.
    const double u = unit(rng);
    out.y[i] = u < spec.flip_probability(z[i], clean.a[i]) ? flipped(z[i]) : z[i];
  }
  out.provenance.seeds.push_back(seed);
  out.provenance.notes.push_back("label bias injected");
  return out;
}

std::size_t selection_removal_count(std::size_t positives, std::size_t group_size,
                                    double sigma) {
  if (!(sigma >= 1.0)) throw DomainError("sigma must be >= 1");
  if (positives > group_size) throw DomainError("more positives than rows");
  if (positives == 0 || sigma == 1.0) return 0;
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(group_size);
  // (p - k) / (n - k) <= p / (n sigma)  <=>  sigma n (p - k) <= p (n - k)
  auto within = [&](std::size_t k) {
    const double kd = static_cast<double>(k);
    return sigma * n * (p - kd) <= p * (n - kd);
  };
  const double target = p / (n * sigma);
  const double estimate = target < 1.0 ? (p - target * n) / (1.0 - target) : 0.0;
  std::size_t k = static_cast<std::size_t>(std::max(0.0, std::floor(estimate) - 2.0));
  k = std::min(k, positives);
  while (k > 0 && within(k - 1)) --k;
  while (k < positives && !within(k)) ++k;
  return k;
}

Dataset inject_selection_bias(const Dataset& ds, double sigma, std::uint64_t seed,
                              Group group) {
  if (!(sigma >= 1.0) || !std::isfinite(sigma))
    throw DomainError("sigma must be >= 1, got " + std::to_string(sigma));
  check_group(group);
  ds.validate();
  std::vector<std::size_t> positives;
  std::size_t group_size = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.a[i] != group) continue;
    ++group_size;
    if (is_positive(ds.y[i])) positives.push_back(i);
  }
  const std::size_t remove = selection_removal_count(positives.size(), group_size, sigma);
  if (remove > 0 && remove == group_size)
    throw DomainError("selection bias would empty group " + std::to_string(group) +
                      ": all " + std::to_string(group_size) + " rows are positive");
  if (remove == 0) {
    Dataset out = ds;
    out.provenance.selection_removed = 0;
    return out;
  }
  Rng rng(seed);
  std::shuffle(positives.begin(), positives.end(), rng);
  std::vector<bool> drop(ds.size(), false);
  for (std::size_t j = 0; j < remove; ++j) drop[positives[j]] = true;
  std::vector<std::size_t> keep;
  keep.reserve(ds.size() - remove);
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (!drop[i]) keep.push_back(i);
  Dataset out = ds.subset(keep);
  out.provenance.selection_removed = remove;
  out.provenance.seeds.push_back(seed);
  out.provenance.notes.push_back("selection bias: removed " + std::to_string(remove) +
                                 " positives from group " + std::to_string(group));
  return out;
}

}  // namespace bfarl
