#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bfarl/dataset.hpp"
#include "bfarl/types.hpp"

namespace bfarl {

enum class Activation { relu, sigmoid };

// Logits are clamped to [-kLogitClamp, kLogitClamp] before sigmoid/log.
inline constexpr double kLogitClamp = 30.0;

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd biases;   // out
};

// Dense feedforward binary classifier f(x, w). The last layer has a single
// output unit whose logit goes through a sigmoid to give P(Y=+1 | x).
// The same structure doubles as a gradient container.
struct ModelParams {
  std::vector<Layer> layers;
  std::vector<Activation> activations;  // one per hidden layer

  std::size_t input_dim() const;
  std::size_t num_parameters() const;
  void validate() const;

  ModelParams zeros_like() const;
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);
};

struct TrainConfig {
  double eta = 0.1;        // inner (one-step-forward) learning rate
  double eta_prime = 0.0;  // meta learning rate
  double gamma = 0.1;      // actual-training learning rate
  std::size_t batch_size = 64;
  std::size_t steps = 1000;
  std::vector<std::size_t> hidden_sizes{32};
  Activation activation = Activation::relu;
  std::uint64_t seed = 0;

  void validate() const;
};

// Glorot-uniform weights, zero biases.
ModelParams make_model(std::size_t input_dim,
                       std::span<const std::size_t> hidden_sizes,
                       Activation activation, std::uint64_t seed);

double clamp_logit(double logit);
double sigmoid(double logit);

double forward(const ModelParams& params, std::span<const double> x);

// Output logits for every row of `x` (unclamped).
Eigen::VectorXd forward_logits(const ModelParams& params, const Eigen::MatrixXd& x);
Eigen::VectorXd predict_proba(const ModelParams& params, const Eigen::MatrixXd& x);

// +1 iff P(Y=+1|x) >= 0.5.
std::vector<Label> predict_labels(const ModelParams& params, const Eigen::MatrixXd& x);

// -ln p for y=+1, -ln(1-p) for y=-1.
double bce_loss(double p, Label y);

// Same loss evaluated from a logit; smooth and overflow free.
double bce_from_logit(double logit, Label y);

// Batch loss value plus its derivative with respect to each output logit.
struct LossEval {
  double value = 0.0;
  Eigen::VectorXd dlogits;
};

using BatchLoss =
    std::function<LossEval(const Eigen::VectorXd& logits, const Dataset& batch)>;

// Mean over rows of c_pos[i]*bce(p_i,+1) + c_neg[i]*bce(p_i,-1).
LossEval weighted_bce(const Eigen::VectorXd& logits, const Eigen::VectorXd& c_pos,
                      const Eigen::VectorXd& c_neg);

// Mean binary cross-entropy against batch.y.
BatchLoss mean_bce();

struct ValueAndGrad {
  double value = 0.0;
  ModelParams grad;
};

ValueAndGrad value_and_grad(const ModelParams& params, const Dataset& batch,
                            const BatchLoss& loss);
ModelParams grad(const ModelParams& params, const Dataset& batch, const BatchLoss& loss);
double loss_value(const ModelParams& params, const Dataset& batch, const BatchLoss& loss);

// Backpropagates a given d(loss)/d(logit) vector; the building block of grad().
ModelParams backprop(const ModelParams& params, const Eigen::MatrixXd& x,
                     const Eigen::VectorXd& dlogits);

ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double lr);

// Elementwise helpers over identically shaped parameter sets.
double dot(const ModelParams& lhs, const ModelParams& rhs);
ModelParams axpy(double scale, const ModelParams& x, const ModelParams& y);  // scale*x + y
bool all_finite(const ModelParams& params);

}  // namespace bfarl
