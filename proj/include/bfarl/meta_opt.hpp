#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "bfarl/dataset.hpp"
#include "bfarl/losses.hpp"
#include "bfarl/model.hpp"
#include "bfarl/random.hpp"

namespace bfarl {

struct MetaTraceRecord {
  std::size_t step = 0;
  PerGroup<double> alpha{};
  PerGroup<double> beta{};
  double inner_loss = 0.0;   // L_F(w_t; meta_t)
  double meta_loss = 0.0;    // L_F(w_{t+1}(meta_t); meta_t)
  double actual_loss = 0.0;  // L_F(w_t; meta_{t+1})
};

using MetaTrace = std::vector<MetaTraceRecord>;

// w - eta * grad_w L_F(w; meta).
ModelParams inner_step(const ModelParams& params, const MetaParams& meta,
                       const Dataset& batch, const GroupLabelMarginals& marginals,
                       double eta);

// Meta objective g(meta) = L_F(inner_step(params, meta); meta).
double meta_objective(const ModelParams& params, const MetaParams& meta,
                      const Dataset& batch, const GroupLabelMarginals& marginals,
                      double eta);

// Total derivative of g with respect to (alpha0, alpha1, beta0, beta1).
//
// L_F is linear in the meta parameters, L_F = sum_k c_k(meta) h_k(w), so the
// one-step-forward weights satisfy d w'/d c_k = -eta grad h_k(w) and
//   dg/dc_k = h_k(w') - eta <grad L_F(w'), grad h_k(w)>
// which needs first-order gradients only.
std::array<double, 4> meta_gradient(const ModelParams& params, const MetaParams& meta,
                                    const Dataset& batch,
                                    const GroupLabelMarginals& marginals, double eta);

// meta - eta_prime * meta_gradient, with alpha clamped at zero.
MetaParams meta_step(const ModelParams& params, const MetaParams& meta,
                     const Dataset& batch, const GroupLabelMarginals& marginals,
                     double eta, double eta_prime);

// Same mechanics as inner_step with learning rate gamma.
ModelParams actual_step(const ModelParams& params, const MetaParams& meta,
                        const Dataset& batch, const GroupLabelMarginals& marginals,
                        double gamma);

// Seeded mini-batch schedule: reshuffled every epoch, partial last batch kept.
class BatchScheduler {
 public:
  BatchScheduler(std::size_t n_rows, std::size_t batch_size, std::uint64_t seed);

  // Row indices of the next batch.
  std::vector<std::size_t> next();

 private:
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t batch_size_;
  Rng rng_;
};

struct TrainResult {
  ModelParams params;
  MetaParams meta;
  MetaTrace trace;
};

// Bi-level loop: for each step, one-step-forward inner update, meta update on
// the resulting weights, then the actual update of w_t with the new meta.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const MetaParams& init_meta = {});

// Plain SGD on L_F with meta held fixed; same init and batch schedule as
// train(). With meta (1,1,0,0) this is mean-BCE training.
TrainResult train_fixed_meta(const Dataset& dataset, const TrainConfig& config,
                             const MetaParams& meta = {});

}  // namespace bfarl
