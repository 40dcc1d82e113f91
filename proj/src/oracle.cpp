#include "bfarl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace bfarl {

namespace {

constexpr std::array<Label, 2> kLabels{Label::negative, Label::positive};

std::size_t idx(Label y) { return is_positive(y) ? 1 : 0; }

double prob_a(const DiscreteWorld& w, Group a) { return a == 1 ? w.p_a1 : 1.0 - w.p_a1; }

// P(Y = k | Z = l, A = a).
double observe_prob(const BiasSpec& bias, Label l, Label k, Group a) {
  const double flip = bias.flip_probability(l, a);
  return k == l ? 1.0 - flip : flip;
}

double prob_x(const DiscreteWorld& w, std::size_t i) { return w.xz_prob[i][0] + w.xz_prob[i][1]; }

}  // namespace

void DiscreteWorld::validate() const {
  if (xz_prob.empty()) throw DomainError("world needs at least one feature point");
  if (xz_prob.size() != classifier.size())
    throw ShapeError("classifier table size differs from feature point count");
  double total = 0.0;
  for (const auto& row : xz_prob)
    for (const double p : row) {
      if (!(p >= 0.0)) throw DomainError("world probabilities must be non-negative");
      total += p;
    }
  if (std::abs(total - 1.0) > 1e-12)
    throw DomainError("world probabilities sum to " + std::to_string(total));
  for (const double f : classifier)
    if (!(f > 0.0 && f < 1.0)) throw DomainError("classifier outputs must lie in (0,1)");
  if (!(p_a1 > 0.0 && p_a1 < 1.0))
    throw DomainError("world has a single sensitive group; fairness term undefined");
  bias.validate();
  for (Group a = 0; a < kNumGroups; ++a) (void)delta_factor(bias, a);
}

CouplingMatrix coupling_matrix(const DiscreteWorld& world) {
  CouplingMatrix u{};
  for (Group a = 0; a < kNumGroups; ++a) {
    const double delta = delta_factor(world.bias, a);
    auto theta_sgn = [&](Label s) {
      return is_positive(s) ? world.bias.theta_plus[a] : world.bias.theta_minus[a];
    };
    for (const Label l : kLabels)
      for (const Label k : kLabels)
        u[a][idx(l)][idx(k)] = delta * (l == k ? theta_sgn(l) : theta_sgn(k));
  }
  return u;
}

double world_loss(const DiscreteWorld& world, double p, Label k) {
  switch (world.loss) {
    case LossKind::bce:
      return bce_loss(p, k);
    case LossKind::zero_one: {
      const Label pred = p >= 0.5 ? Label::positive : Label::negative;
      return pred == k ? 0.0 : 1.0;
    }
  }
  return 0.0;
}

GroupLabelMarginals world_marginals(const DiscreteWorld& world) {
  GroupLabelMarginals m;
  for (Group a = 0; a < kNumGroups; ++a) {
    double pos = 0.0;
    for (std::size_t i = 0; i < world.num_points(); ++i)
      for (const Label l : kLabels)
        pos += world.xz_prob[i][idx(l)] * observe_prob(world.bias, l, Label::positive, a);
    m.p_pos[a] = pos;
  }
  return m;
}

PerGroup<double> regularizer_group_mass(const DiscreteWorld& world) {
  const GroupLabelMarginals m = world_marginals(world);
  PerGroup<double> mass{};
  for (Group a = 0; a < kNumGroups; ++a) {
    double e = 0.0;
    for (std::size_t i = 0; i < world.num_points(); ++i) {
      const double f = world.classifier[i];
      e += prob_x(world, i) * (m.p_pos[a] * world_loss(world, f, Label::positive) +
                               (1.0 - m.p_pos[a]) * world_loss(world, f, Label::negative));
    }
    mass[a] = prob_a(world, a) * e;
  }
  return mass;
}

PerGroup<double> group_risks(const DiscreteWorld& world) {
  PerGroup<double> risk{};
  for (Group a = 0; a < kNumGroups; ++a)
    for (std::size_t i = 0; i < world.num_points(); ++i)
      for (const Label l : kLabels)
        for (const Label k : kLabels)
          risk[a] += world.xz_prob[i][idx(l)] * observe_prob(world.bias, l, k, a) *
                     world_loss(world, world.classifier[i], k);
  return risk;
}

double clean_expected_loss(const DiscreteWorld& world) {
  double total = 0.0;
  for (std::size_t i = 0; i < world.num_points(); ++i)
    for (const Label l : kLabels)
      total += world.xz_prob[i][idx(l)] * world_loss(world, world.classifier[i], l);
  return total;
}

double lhs_expected_bfarl(const DiscreteWorld& world, const MetaParams& meta) {
  world.validate();
  const GroupLabelMarginals m = world_marginals(world);
  double total = 0.0;
  // Enumerate every (x, z, a, y) outcome of the observed distribution.
  for (std::size_t i = 0; i < world.num_points(); ++i) {
    const double f = world.classifier[i];
    for (const Label l : kLabels) {
      for (Group a = 0; a < kNumGroups; ++a) {
        const double delta = delta_factor(world.bias, a);
        const double expected = m.p_pos[a] * world_loss(world, f, Label::positive) +
                                (1.0 - m.p_pos[a]) * world_loss(world, f, Label::negative);
        for (const Label k : kLabels) {
          const double p = world.xz_prob[i][idx(l)] * prob_a(world, a) *
                           observe_prob(world.bias, l, k, a);
          total += p * (delta * world_loss(world, f, k) - meta.beta[a] * expected);
        }
      }
    }
  }
  return total;
}

Decomposition rhs_decomposition(const DiscreteWorld& world, const MetaParams& meta,
                                double rho_a, double rho_b) {
  world.validate();
  return rhs_decomposition(world, meta, rho_a, rho_b, coupling_matrix(world));
}

Decomposition rhs_decomposition(const DiscreteWorld& world, const MetaParams& meta,
                                double rho_a, double rho_b, const CouplingMatrix& u) {
  world.validate();
  const double beta_sum = meta.beta[0] + meta.beta[1];
  const double scale = std::max({1.0, std::abs(rho_a), std::abs(rho_b), std::abs(beta_sum)});
  if (std::abs((rho_a + rho_b) - beta_sum) > 1e-12 * scale)
    throw DomainError("inconsistent rho: rho_a - beta0 must equal beta1 - rho_b");

  const PerGroup<double> mass = regularizer_group_mass(world);
  const double lambda = std::abs(meta.beta[0] - rho_a);
  const double gap = mass[0] - mass[1];
  if ((rho_a - meta.beta[0]) * gap < 0.0 && 2.0 * lambda * std::abs(gap) > 1e-14)
    throw DomainError("inconsistent rho: sign of rho_a - beta0 disagrees with the group gap");

  const GroupLabelMarginals m = world_marginals(world);
  const PerGroup<double> gamma{rho_a, rho_b};
  Decomposition d;
  d.lambda = lambda;
  d.clean = clean_expected_loss(world);
  d.fairness = lambda * std::abs(gap);
  for (Group a = 0; a < kNumGroups; ++a) {
    const PerGroup<double> py{1.0 - m.p_pos[a], m.p_pos[a]};  // indexed by idx(k)
    double inner = 0.0;
    for (std::size_t i = 0; i < world.num_points(); ++i)
      for (const Label l : kLabels)
        for (const Label k : kLabels)
          inner += world.xz_prob[i][idx(l)] *
                   (u[a][idx(l)][idx(k)] - gamma[a] * py[idx(k)]) *
                   world_loss(world, world.classifier[i], k);
    d.bias += prob_a(world, a) * inner;
  }
  return d;
}

std::array<double, 2> consistent_rho(const DiscreteWorld& world, const MetaParams& meta,
                                     double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  const PerGroup<double> mass = regularizer_group_mass(world);
  const double s = mass[0] >= mass[1] ? 1.0 : -1.0;
  return {meta.beta[0] + s * lambda, meta.beta[1] - s * lambda};
}

VerifyResult verify_decomposition(const DiscreteWorld& world, const MetaParams& meta,
                                  double rho_a, double rho_b, double tol) {
  const double lhs = lhs_expected_bfarl(world, meta);
  const double rhs = rhs_decomposition(world, meta, rho_a, rho_b).total();
  VerifyResult r;
  r.residual = std::abs(lhs - rhs);
  r.holds = r.residual <= tol;
  return r;
}

DiscreteWorld random_world(Rng& rng, std::size_t points, LossKind loss) {
  if (points == 0) throw DomainError("world needs at least one feature point");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DiscreteWorld w;
  w.loss = loss;
  w.xz_prob.resize(points);
  double total = 0.0;
  for (auto& row : w.xz_prob)
    for (double& p : row) {
      p = unit(rng) + 1e-3;
      total += p;
    }
  for (auto& row : w.xz_prob)
    for (double& p : row) p /= total;
  // Renormalise the last cell so the probabilities sum to one exactly enough.
  double sum = 0.0;
  for (const auto& row : w.xz_prob) sum += row[0] + row[1];
  w.xz_prob.back()[1] += 1.0 - sum;

  w.classifier.resize(points);
  for (double& f : w.classifier) f = 0.02 + 0.96 * unit(rng);
  w.p_a1 = 0.1 + 0.8 * unit(rng);
  for (Group a = 0; a < kNumGroups; ++a) {
    w.bias.theta_plus[a] = 0.45 * unit(rng);
    w.bias.theta_minus[a] = 0.45 * unit(rng);
  }
  return w;
}

OracleSummary check_decomposition_suite(std::size_t worlds, std::uint64_t seed, double tol) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> points(1, 6);
  OracleSummary summary;
  for (std::size_t w = 0; w < worlds; ++w) {
    const LossKind loss = w % 4 == 3 ? LossKind::zero_one : LossKind::bce;
    const DiscreteWorld world = random_world(rng, points(rng), loss);
    MetaParams meta;
    meta.beta = {2.0 * unit(rng) - 1.0, 2.0 * unit(rng) - 1.0};
    const auto rho = consistent_rho(world, meta, unit(rng));
    const VerifyResult r = verify_decomposition(world, meta, rho[0], rho[1], tol);
    ++summary.worlds;
    if (!r.holds) ++summary.failures;
    summary.max_residual = std::max(summary.max_residual, r.residual);
  }
  return summary;
}

}  // namespace bfarl
