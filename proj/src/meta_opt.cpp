#include "bfarl/meta_opt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace bfarl {

namespace {

void require_finite(double v, const char* what, std::size_t step) {
  if (!std::isfinite(v))
    throw NumericError(std::string(what) + " is not finite at step " + std::to_string(step));
}

struct ComponentGrads {
  std::array<double, kNumComponents> values{};
  std::array<ModelParams, kNumComponents> grads;
};

ComponentGrads component_grads(const ModelParams& params, const Dataset& batch,
                               const GroupLabelMarginals& marginals) {
  const Eigen::VectorXd logits = forward_logits(params, batch.features);
  const auto parts = bfarl_components(logits, batch, marginals);
  ComponentGrads out;
  for (std::size_t k = 0; k < kNumComponents; ++k) {
    out.values[k] = parts[k].value;
    out.grads[k] = backprop(params, batch.features, parts[k].dlogits);
  }
  return out;
}

}  // namespace

ModelParams inner_step(const ModelParams& params, const MetaParams& meta,
                       const Dataset& batch, const GroupLabelMarginals& marginals,
                       double eta) {
  const ValueAndGrad vg = value_and_grad(params, batch, bfarl_loss(meta, marginals));
  require_finite(vg.value, "inner loss", 0);
  return sgd_step(params, vg.grad, eta);
}

double meta_objective(const ModelParams& params, const MetaParams& meta,
                      const Dataset& batch, const GroupLabelMarginals& marginals,
                      double eta) {
  const ModelParams ahead = inner_step(params, meta, batch, marginals, eta);
  return loss_value(ahead, batch, bfarl_loss(meta, marginals));
}

std::array<double, 4> meta_gradient(const ModelParams& params, const MetaParams& meta,
                                    const Dataset& batch,
                                    const GroupLabelMarginals& marginals, double eta) {
  const auto weights = component_weights(meta);
  const ComponentGrads here = component_grads(params, batch, marginals);

  ModelParams full = params.zeros_like();
  for (std::size_t k = 0; k < kNumComponents; ++k)
    full = axpy(weights[k], here.grads[k], full);
  const ModelParams ahead = sgd_step(params, full, eta);

  const ValueAndGrad at_ahead = value_and_grad(ahead, batch, bfarl_loss(meta, marginals));
  const Eigen::VectorXd ahead_logits = forward_logits(ahead, batch.features);
  const auto ahead_parts = bfarl_components(ahead_logits, batch, marginals);

  // dg/dc_k for the component coefficients c = (a0, a1, -b0, -b1).
  std::array<double, 4> dc{};
  for (std::size_t k = 0; k < kNumComponents; ++k)
    dc[k] = ahead_parts[k].value - eta * dot(at_ahead.grad, here.grads[k]);
  return {dc[0], dc[1], -dc[2], -dc[3]};
}

MetaParams meta_step(const ModelParams& params, const MetaParams& meta,
                     const Dataset& batch, const GroupLabelMarginals& marginals,
                     double eta, double eta_prime) {
  if (eta_prime == 0.0) return meta;
  const auto g = meta_gradient(params, meta, batch, marginals, eta);
  for (const double v : g)
    if (!std::isfinite(v)) throw NumericError("meta gradient is not finite");
  auto v = meta.as_array();
  for (std::size_t k = 0; k < 4; ++k) v[k] -= eta_prime * g[k];
  MetaParams out = MetaParams::from_array(v);
  out.alpha[0] = std::max(0.0, out.alpha[0]);
  out.alpha[1] = std::max(0.0, out.alpha[1]);
  return out;
}

ModelParams actual_step(const ModelParams& params, const MetaParams& meta,
                        const Dataset& batch, const GroupLabelMarginals& marginals,
                        double gamma) {
  return inner_step(params, meta, batch, marginals, gamma);
}

BatchScheduler::BatchScheduler(std::size_t n_rows, std::size_t batch_size,
                               std::uint64_t seed)
    : order_(n_rows), batch_size_(batch_size), rng_(seed) {
  if (n_rows == 0) throw DomainError("cannot batch an empty dataset");
  if (batch_size == 0) throw DomainError("batch size must be positive");
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  std::shuffle(order_.begin(), order_.end(), rng_);
}

std::vector<std::size_t> BatchScheduler::next() {
  if (cursor_ >= order_.size()) {
    std::shuffle(order_.begin(), order_.end(), rng_);
    cursor_ = 0;
  }
  const std::size_t end = std::min(order_.size(), cursor_ + batch_size_);
  std::vector<std::size_t> rows(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                order_.begin() + static_cast<std::ptrdiff_t>(end));
  cursor_ = end;
  return rows;
}

namespace {

struct TrainingSetup {
  ModelParams params;
  GroupLabelMarginals marginals;
  BatchScheduler batches;
};

TrainingSetup setup(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  dataset.validate();
  if (dataset.size() == 0) throw DomainError("cannot train on an empty dataset");
  return {make_model(dataset.dim(), config.hidden_sizes, config.activation,
                     derive_seed(config.seed, seed_stream::init)),
          estimate_marginals(dataset),
          BatchScheduler(dataset.size(), config.batch_size,
                         derive_seed(config.seed, seed_stream::batches))};
}

}  // namespace

TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const MetaParams& init_meta) {
  init_meta.validate();
  TrainingSetup s = setup(dataset, config);
  TrainResult result{std::move(s.params), init_meta, {}};
  result.trace.reserve(config.steps);

  for (std::size_t t = 1; t <= config.steps; ++t) {
    const std::vector<std::size_t> rows = s.batches.next();
    const Dataset batch = dataset.subset(rows);
    const BatchLoss current = bfarl_loss(result.meta, s.marginals);

    MetaTraceRecord rec;
    rec.step = t;
    const ValueAndGrad vg = value_and_grad(result.params, batch, current);
    rec.inner_loss = vg.value;
    require_finite(rec.inner_loss, "inner loss", t);
    const ModelParams ahead = sgd_step(result.params, vg.grad, config.eta);
    rec.meta_loss = loss_value(ahead, batch, current);
    require_finite(rec.meta_loss, "meta loss", t);

    result.meta = meta_step(result.params, result.meta, batch, s.marginals, config.eta,
                            config.eta_prime);

    const ValueAndGrad actual =
        value_and_grad(result.params, batch, bfarl_loss(result.meta, s.marginals));
    rec.actual_loss = actual.value;
    require_finite(rec.actual_loss, "actual loss", t);
    result.params = sgd_step(result.params, actual.grad, config.gamma);
    if (!all_finite(result.params))
      throw NumericError("parameters diverged at step " + std::to_string(t));

    rec.alpha = result.meta.alpha;
    rec.beta = result.meta.beta;
    result.trace.push_back(rec);
  }
  return result;
}

TrainResult train_fixed_meta(const Dataset& dataset, const TrainConfig& config,
                             const MetaParams& meta) {
  meta.validate();
  TrainingSetup s = setup(dataset, config);
  TrainResult result{std::move(s.params), meta, {}};
  const BatchLoss loss = bfarl_loss(meta, s.marginals);
  for (std::size_t t = 1; t <= config.steps; ++t) {
    const Dataset batch = dataset.subset(s.batches.next());
    const ValueAndGrad vg = value_and_grad(result.params, batch, loss);
    require_finite(vg.value, "loss", t);
    result.params = sgd_step(result.params, vg.grad, config.gamma);
    if (!all_finite(result.params))
      throw NumericError("parameters diverged at step " + std::to_string(t));
  }
  return result;
}

}  // namespace bfarl
