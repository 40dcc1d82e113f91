#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bfarl/bias.hpp"
#include "bfarl/losses.hpp"
#include "bfarl/random.hpp"

namespace bfarl {

enum class LossKind { bce, zero_one };

// Fully enumerable joint distribution used to check the loss decomposition.
// The sensitive attribute is independent of (X, Z):
//   P(x_i, z, a) = P(A=a) * xz_prob[i][z == +1].
// Observed labels follow the flip rates in `bias` given (Z, A).
struct DiscreteWorld {
  std::vector<std::array<double, 2>> xz_prob;  // [i][0]: z=-1, [i][1]: z=+1
  std::vector<double> classifier;              // f(x_i) = P(Y=+1 | x_i)
  double p_a1 = 0.5;
  BiasSpec bias;
  LossKind loss = LossKind::bce;

  std::size_t num_points() const { return classifier.size(); }
  void validate() const;
};

// U[a][l][k] for l, k in {-1:0, +1:1}: delta_a theta_a^{sgn(k)} off the
// diagonal, delta_a theta_a^{sgn(l)} on it.
using CouplingMatrix = PerGroup<std::array<std::array<double, 2>, 2>>;

CouplingMatrix coupling_matrix(const DiscreteWorld& world);

double world_loss(const DiscreteWorld& world, double p, Label k);

// P~(Y=+1 | A=a) implied by the world.
GroupLabelMarginals world_marginals(const DiscreteWorld& world);

// Group mass of the expectation regularizer, E[1{A=a} E_{Y|A=a} l(f(X), Y)].
PerGroup<double> regularizer_group_mass(const DiscreteWorld& world);

// Conditional observed risks E_{X,Y|A=a} l(f(X), Y).
PerGroup<double> group_risks(const DiscreteWorld& world);

double clean_expected_loss(const DiscreteWorld& world);

// E_{D~}[delta_a l(f(X),Y) - beta0 (1-a) E_{Y|A=0} l - beta1 a E_{Y|A=1} l].
double lhs_expected_bfarl(const DiscreteWorld& world, const MetaParams& meta);

struct Decomposition {
  double clean = 0.0;
  double fairness = 0.0;
  double bias = 0.0;
  double lambda = 0.0;
  double total() const { return clean + fairness + bias; }
};

// Clean loss + lambda |G0 - G1| + sum_a P(a) sum_{k,l} P(Z=l)
// E_{x|l}(U_lk - gamma_a P(Y=k|a)) l(f(x),k), with gamma = (rho_a, rho_b) and
// lambda = |beta0 - rho_a|. Requires rho_a + rho_b = beta0 + beta1 and the
// sign of (rho_a - beta0) to agree with that of G0 - G1.
Decomposition rhs_decomposition(const DiscreteWorld& world, const MetaParams& meta,
                                double rho_a, double rho_b);
Decomposition rhs_decomposition(const DiscreteWorld& world, const MetaParams& meta,
                                double rho_a, double rho_b, const CouplingMatrix& u);

// (rho_a, rho_b) at distance lambda >= 0 from beta satisfying the conditions
// above.
std::array<double, 2> consistent_rho(const DiscreteWorld& world, const MetaParams& meta,
                                     double lambda);

struct VerifyResult {
  bool holds = false;
  double residual = 0.0;
};

VerifyResult verify_decomposition(const DiscreteWorld& world, const MetaParams& meta,
                                  double rho_a, double rho_b, double tol);

// Random valid world with `points` feature points, drawn from `rng`.
DiscreteWorld random_world(Rng& rng, std::size_t points, LossKind loss = LossKind::bce);

struct OracleSummary {
  std::size_t worlds = 0;
  std::size_t failures = 0;
  double max_residual = 0.0;
};

// Runs verify_decomposition on `worlds` random worlds with random beta/rho.
OracleSummary check_decomposition_suite(std::size_t worlds, std::uint64_t seed,
                                        double tol = 1e-8);

}  // namespace bfarl
