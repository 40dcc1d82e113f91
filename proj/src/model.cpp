#include "bfarl/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bfarl/random.hpp"

namespace bfarl {

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& pre, Activation act) {
  switch (act) {
    case Activation::relu:
      return pre.cwiseMax(0.0);
    case Activation::sigmoid:
      return pre.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  return pre;
}

// d act / d pre, expressed through the pre-activation and activation values.
Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& pre,
                                      const Eigen::MatrixXd& post, Activation act) {
  switch (act) {
    case Activation::relu:
      return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::sigmoid:
      return post.array() * (1.0 - post.array());
  }
  return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

struct ForwardCache {
  std::vector<Eigen::MatrixXd> pre;   // per hidden layer
  std::vector<Eigen::MatrixXd> post;  // post[0] = input
  Eigen::VectorXd logits;
};

ForwardCache run_forward(const ModelParams& params, const Eigen::MatrixXd& x) {
  if (static_cast<std::size_t>(x.cols()) != params.input_dim())
    throw ShapeError("input has " + std::to_string(x.cols()) +
                     " features, model expects " + std::to_string(params.input_dim()));
  ForwardCache cache;
  cache.post.push_back(x);
  const std::size_t hidden = params.activations.size();
  for (std::size_t t = 0; t < hidden; ++t) {
    const Layer& layer = params.layers[t];
    Eigen::MatrixXd pre = cache.post.back() * layer.weights.transpose();
    pre.rowwise() += layer.biases.transpose();
    cache.post.push_back(activate(pre, params.activations[t]));
    cache.pre.push_back(std::move(pre));
  }
  const Layer& out = params.layers.back();
  cache.logits = cache.post.back() * out.weights.row(0).transpose();
  cache.logits.array() += out.biases(0);
  return cache;
}

void check_same_shape(const ModelParams& lhs, const ModelParams& rhs) {
  if (lhs.layers.size() != rhs.layers.size())
    throw ShapeError("parameter sets have different layer counts");
  for (std::size_t t = 0; t < lhs.layers.size(); ++t) {
    if (lhs.layers[t].weights.rows() != rhs.layers[t].weights.rows() ||
        lhs.layers[t].weights.cols() != rhs.layers[t].weights.cols() ||
        lhs.layers[t].biases.size() != rhs.layers[t].biases.size())
      throw ShapeError("parameter sets differ in layer " + std::to_string(t));
  }
}

}  // namespace

std::size_t ModelParams::input_dim() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  return static_cast<std::size_t>(layers.front().weights.cols());
}

std::size_t ModelParams::num_parameters() const {
  std::size_t n = 0;
  for (const Layer& l : layers)
    n += static_cast<std::size_t>(l.weights.size() + l.biases.size());
  return n;
}

void ModelParams::validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  if (activations.size() + 1 != layers.size())
    throw ShapeError("need one activation per hidden layer");
  for (std::size_t t = 0; t < layers.size(); ++t) {
    const Layer& l = layers[t];
    if (l.biases.size() != l.weights.rows())
      throw ShapeError("bias length mismatch in layer " + std::to_string(t));
    if (t > 0 && l.weights.cols() != layers[t - 1].weights.rows())
      throw ShapeError("layer " + std::to_string(t) + " input does not match layer " +
                       std::to_string(t - 1) + " output");
    if (!l.weights.allFinite() || !l.biases.allFinite())
      throw NumericError("non-finite parameter in layer " + std::to_string(t));
  }
  if (layers.back().weights.rows() != 1)
    throw ShapeError("output layer must have a single unit");
}

ModelParams ModelParams::zeros_like() const {
  ModelParams out = *this;
  for (Layer& l : out.layers) {
    l.weights.setZero();
    l.biases.setZero();
  }
  return out;
}

std::vector<double> ModelParams::flatten() const {
  std::vector<double> flat;
  flat.reserve(num_parameters());
  for (const Layer& l : layers) {
    flat.insert(flat.end(), l.weights.data(), l.weights.data() + l.weights.size());
    flat.insert(flat.end(), l.biases.data(), l.biases.data() + l.biases.size());
  }
  return flat;
}

void ModelParams::assign_flat(std::span<const double> values) {
  if (values.size() != num_parameters())
    throw ShapeError("flat parameter vector has wrong length");
  std::size_t pos = 0;
  for (Layer& l : layers) {
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.weights.size(),
                l.weights.data());
    pos += static_cast<std::size_t>(l.weights.size());
    std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), l.biases.size(),
                l.biases.data());
    pos += static_cast<std::size_t>(l.biases.size());
  }
}

void TrainConfig::validate() const {
  if (!(eta >= 0.0) || !(eta_prime >= 0.0) || !(gamma >= 0.0))
    throw ConfigError("learning rates must be non-negative");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (steps < 1) throw ConfigError("steps must be at least 1");
  for (const std::size_t h : hidden_sizes)
    if (h == 0) throw ConfigError("hidden layer sizes must be positive");
}

ModelParams make_model(std::size_t input_dim, std::span<const std::size_t> hidden_sizes,
                       Activation activation, std::uint64_t seed) {
  if (input_dim == 0) throw ShapeError("input dimension must be positive");
  Rng rng(seed);
  ModelParams params;
  std::size_t fan_in = input_dim;
  auto add_layer = [&](std::size_t fan_out) {
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-s, s);
    Layer layer;
    layer.weights.resize(static_cast<Eigen::Index>(fan_out),
                         static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r)
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c)
        layer.weights(r, c) = dist(rng);
    layer.biases = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out));
    params.layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (const std::size_t h : hidden_sizes) {
    if (h == 0) throw ShapeError("hidden layer sizes must be positive");
    add_layer(h);
    params.activations.push_back(activation);
  }
  add_layer(1);
  return params;
}

double clamp_logit(double logit) { return std::clamp(logit, -kLogitClamp, kLogitClamp); }

double sigmoid(double logit) { return 1.0 / (1.0 + std::exp(-clamp_logit(logit))); }

double forward(const ModelParams& params, std::span<const double> x) {
  Eigen::MatrixXd row(1, static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) row(0, static_cast<Eigen::Index>(j)) = x[j];
  return sigmoid(run_forward(params, row).logits(0));
}

Eigen::VectorXd forward_logits(const ModelParams& params, const Eigen::MatrixXd& x) {
  return run_forward(params, x).logits;
}

Eigen::VectorXd predict_proba(const ModelParams& params, const Eigen::MatrixXd& x) {
  return forward_logits(params, x).unaryExpr([](double s) { return sigmoid(s); });
}

std::vector<Label> predict_labels(const ModelParams& params, const Eigen::MatrixXd& x) {
  const Eigen::VectorXd p = predict_proba(params, x);
  std::vector<Label> out(static_cast<std::size_t>(p.size()));
  for (Eigen::Index i = 0; i < p.size(); ++i)
    out[static_cast<std::size_t>(i)] = p(i) >= 0.5 ? Label::positive : Label::negative;
  return out;
}

double bce_loss(double p, Label y) {
  if (!(p >= 0.0 && p <= 1.0))
    throw NumericError("probability outside [0,1]: " + std::to_string(p));
  const double lo = sigmoid(-kLogitClamp);
  const double hi = sigmoid(kLogitClamp);
  const double pc = std::clamp(p, lo, hi);
  return is_positive(y) ? -std::log(pc) : -std::log1p(-pc);
}

namespace {
double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }
}  // namespace

double bce_from_logit(double logit, Label y) {
  const double s = clamp_logit(logit);
  return is_positive(y) ? softplus(-s) : softplus(s);
}

LossEval weighted_bce(const Eigen::VectorXd& logits, const Eigen::VectorXd& c_pos,
                      const Eigen::VectorXd& c_neg) {
  const Eigen::Index n = logits.size();
  if (n == 0) throw DomainError("empty batch");
  if (c_pos.size() != n || c_neg.size() != n)
    throw ShapeError("loss coefficient length does not match batch");
  LossEval eval;
  eval.dlogits.resize(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = logits(i);
    const double sc = clamp_logit(s);
    const double p = 1.0 / (1.0 + std::exp(-sc));
    total += c_pos(i) * softplus(-sc) + c_neg(i) * softplus(sc);
    // d/ds softplus(-s) = -(1-p), d/ds softplus(s) = p; flat outside the clamp.
    const bool inside = s >= -kLogitClamp && s <= kLogitClamp;
    eval.dlogits(i) = inside ? inv_n * (c_neg(i) * p - c_pos(i) * (1.0 - p)) : 0.0;
  }
  eval.value = total * inv_n;
  return eval;
}

BatchLoss mean_bce() {
  return [](const Eigen::VectorXd& logits, const Dataset& batch) {
    const Eigen::Index n = logits.size();
    Eigen::VectorXd c_pos(n), c_neg(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool pos = is_positive(batch.y[static_cast<std::size_t>(i)]);
      c_pos(i) = pos ? 1.0 : 0.0;
      c_neg(i) = pos ? 0.0 : 1.0;
    }
    return weighted_bce(logits, c_pos, c_neg);
  };
}

ModelParams backprop(const ModelParams& params, const Eigen::MatrixXd& x,
                     const Eigen::VectorXd& dlogits) {
  const ForwardCache cache = run_forward(params, x);
  if (dlogits.size() != x.rows()) throw ShapeError("dlogits length != batch rows");
  ModelParams g = params.zeros_like();
  const std::size_t hidden = params.activations.size();

  Layer& gout = g.layers.back();
  gout.weights.row(0) = dlogits.transpose() * cache.post.back();
  gout.biases(0) = dlogits.sum();
  Eigen::MatrixXd upstream = dlogits * params.layers.back().weights.row(0);  // n x h

  for (std::size_t t = hidden; t-- > 0;) {
    const Eigen::MatrixXd dpre =
        upstream.cwiseProduct(activation_derivative(cache.pre[t], cache.post[t + 1],
                                                    params.activations[t]));
    g.layers[t].weights = dpre.transpose() * cache.post[t];
    g.layers[t].biases = dpre.colwise().sum().transpose();
    if (t > 0) upstream = dpre * params.layers[t].weights;
  }
  return g;
}

ValueAndGrad value_and_grad(const ModelParams& params, const Dataset& batch,
                            const BatchLoss& loss) {
  if (batch.size() == 0) throw DomainError("empty batch");
  const Eigen::VectorXd logits = forward_logits(params, batch.features);
  LossEval eval = loss(logits, batch);
  return {eval.value, backprop(params, batch.features, eval.dlogits)};
}

ModelParams grad(const ModelParams& params, const Dataset& batch, const BatchLoss& loss) {
  return value_and_grad(params, batch, loss).grad;
}

double loss_value(const ModelParams& params, const Dataset& batch, const BatchLoss& loss) {
  if (batch.size() == 0) throw DomainError("empty batch");
  return loss(forward_logits(params, batch.features), batch).value;
}

ModelParams sgd_step(const ModelParams& params, const ModelParams& grad, double lr) {
  return axpy(-lr, grad, params);
}

double dot(const ModelParams& lhs, const ModelParams& rhs) {
  check_same_shape(lhs, rhs);
  double total = 0.0;
  for (std::size_t t = 0; t < lhs.layers.size(); ++t) {
    total += lhs.layers[t].weights.cwiseProduct(rhs.layers[t].weights).sum();
    total += lhs.layers[t].biases.dot(rhs.layers[t].biases);
  }
  return total;
}

ModelParams axpy(double scale, const ModelParams& x, const ModelParams& y) {
  check_same_shape(x, y);
  ModelParams out = y;
  for (std::size_t t = 0; t < out.layers.size(); ++t) {
    out.layers[t].weights += scale * x.layers[t].weights;
    out.layers[t].biases += scale * x.layers[t].biases;
  }
  return out;
}

bool all_finite(const ModelParams& params) {
  for (const Layer& l : params.layers)
    if (!l.weights.allFinite() || !l.biases.allFinite()) return false;
  return true;
}

}  // namespace bfarl
