#include "bfarl/synthetic.hpp"

#include <cmath>
#include <random>
#include <string>

#include "bfarl/random.hpp"

namespace bfarl {

void SyntheticConfig::validate() const {
  if (n < 1) throw ConfigError("synthetic n must be >= 1");
  if (k < 1) throw ConfigError("synthetic k must be >= 1");
  if (!(a_rate >= 0.0 && a_rate <= 1.0)) throw ConfigError("a_rate must lie in [0,1]");
  if (!(flip_amount >= 0.0 && flip_amount <= 1.0))
    throw ConfigError("flip_amount must lie in [0,1]");
  if (!(rarity >= 0.0)) throw ConfigError("rarity must be >= 0");
  if (!(w_sigma > 0.0)) throw ConfigError("w_sigma must be > 0");
}

SyntheticData generate(const SyntheticConfig& config) {
  config.validate();
  Rng rng(config.seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(config.w_sigma));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticData out;
  out.w_gen.resize(static_cast<Eigen::Index>(config.k));
  for (Eigen::Index j = 0; j < out.w_gen.size(); ++j) out.w_gen(j) = normal(rng);

  Dataset& ds = out.data;
  const auto n = static_cast<Eigen::Index>(config.n);
  const auto k = static_cast<Eigen::Index>(config.k);
  ds.features = Eigen::MatrixXd::Zero(n, k);
  ds.y.resize(config.n);
  ds.a.resize(config.n);
  ds.z.emplace(config.n);

  std::vector<double> on_rate(config.k);
  for (std::size_t j = 0; j + 1 < config.k; ++j)
    on_rate[j] = std::pow(1.0 / static_cast<double>(j + 1), config.rarity);

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = static_cast<std::size_t>(i);
    ds.a[row] = unit(rng) < config.a_rate ? 1 : 0;
    for (Eigen::Index j = 0; j + 1 < k; ++j)
      ds.features(i, j) = unit(rng) < on_rate[static_cast<std::size_t>(j)] ? 1.0 : 0.0;
    ds.features(i, k - 1) = 1.0;
    const double score = ds.features.row(i).dot(out.w_gen);
    const Label z = score > 0.0 ? Label::positive : Label::negative;
    (*ds.z)[row] = z;
    // Flip only where z, coded 0/1, equals a.
    const int z01 = is_positive(z) ? 1 : 0;
    const double u = unit(rng);
    ds.y[row] = (z01 == ds.a[row] && u < config.flip_amount) ? flipped(z) : z;
  }

  ds.feature_names.reserve(config.k);
  for (std::size_t j = 0; j < config.k; ++j)
    ds.feature_names.push_back("x" + std::to_string(j));
  ds.provenance.source = "synthetic";
  ds.provenance.recipe = "sparse-bernoulli linear labeler";
  ds.provenance.seeds.push_back(config.seed);
  return out;
}

}  // namespace bfarl
