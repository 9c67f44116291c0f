#pragma once

// Fully connected regression network: h_l = g_l(W_l^T h_{l-1} + b_l) with
// ReLU hidden layers and an identity output, trained full-batch (or in
// fixed-order mini-batches) with Adam on the mean Huber loss.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "corrml/errors.hpp"
#include "corrml/optim.hpp"
#include "corrml/random.hpp"

namespace corrml {

enum class Activation { Relu, Identity };

template <class Scalar>
struct DenseLayer {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix weights;  // fan_in x fan_out
  Vector bias;     // fan_out
  Activation activation = Activation::Relu;
};

template <class Scalar>
struct DenseNetwork {
  std::vector<DenseLayer<Scalar>> layers;

  Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().weights.rows(); }

  Eigen::Index num_params() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weights.size() + l.bias.size();
    return n;
  }

  void validate() const {
    if (layers.empty()) throw ValidationError("network has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.weights.cols()) throw ValidationError("layer bias size mismatch");
      if (i > 0 && layers[i - 1].weights.cols() != l.weights.rows())
        throw ValidationError("adjacent layer dimensions do not chain");
      if (!l.weights.allFinite() || !l.bias.allFinite()) throw ValidationError("non-finite network parameter");
    }
    if (layers.back().weights.cols() != 1 || layers.back().activation != Activation::Identity)
      throw ValidationError("output layer must be a single identity unit");
  }
};

inline const std::vector<int>& default_hidden_layers() {
  static const std::vector<int> sizes{64, 32, 16, 8};
  return sizes;
}

// He-style uniform initialization: W ~ U(-sqrt(6 / fan_in), sqrt(6 / fan_in)),
// biases zero. Weights are drawn layer by layer in column-major order.
template <class Scalar>
DenseNetwork<Scalar> make_network(Eigen::Index input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
  if (input_dim <= 0) throw ValidationError("network input dimension must be positive");
  Rng rng(seed);
  DenseNetwork<Scalar> net;
  Eigen::Index fan_in = input_dim;
  auto add = [&](Eigen::Index fan_out, Activation act) {
    DenseLayer<Scalar> layer;
    layer.weights.resize(fan_in, fan_out);
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (Eigen::Index j = 0; j < fan_out; ++j)
      for (Eigen::Index i = 0; i < fan_in; ++i)
        layer.weights(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
    layer.bias = DenseLayer<Scalar>::Vector::Zero(fan_out);
    layer.activation = act;
    net.layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (int h : hidden) {
    if (h <= 0) throw ValidationError("hidden layer sizes must be positive");
    add(h, Activation::Relu);
  }
  add(1, Activation::Identity);
  return net;
}

namespace detail {

template <class Derived>
void apply_activation(Eigen::MatrixBase<Derived>& z, Activation act) {
  if (act == Activation::Relu) z = z.cwiseMax(typename Derived::Scalar(0));
}

}  // namespace detail

// Predictions for each row of X.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> forward(const DenseNetwork<Scalar>& net,
                                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (X.cols() != net.input_dim()) throw ValidationError("forward: input dimension mismatch");
  Matrix h = X;
  for (const auto& layer : net.layers) {
    Matrix z = h * layer.weights;
    z.rowwise() += layer.bias.transpose();
    detail::apply_activation(z, layer.activation);
    h = std::move(z);
  }
  return h.col(0);
}

template <class Scalar>
Scalar forward_one(const DenseNetwork<Scalar>& net, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  return forward(net, Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>(x.transpose()))(0);
}

// Mean over samples of 0.5 e^2 for |e| <= delta, else delta (|e| - delta / 2).
template <class Scalar>
Scalar huber_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y_hat, Scalar delta) {
  if (y.size() != y_hat.size() || y.size() == 0) throw ValidationError("huber_loss: length mismatch");
  if (!(delta > Scalar(0))) throw ValidationError("huber_loss: delta must be positive");
  Scalar total(0);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const Scalar a = std::abs(y(i) - y_hat(i));
    total += a <= delta ? Scalar(0.5) * a * a : delta * (a - Scalar(0.5) * delta);
  }
  return total / static_cast<Scalar>(y.size());
}

template <class Scalar>
struct NetworkGradient {
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> weights;
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> bias;
  Scalar loss = Scalar(0);
};

// Exact gradient of the mean Huber loss over the rows of X. The ReLU
// derivative at exactly zero is taken as 0.
template <class Scalar>
NetworkGradient<Scalar> backward(const DenseNetwork<Scalar>& net,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y, Scalar delta) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (X.rows() != y.size() || X.rows() == 0) throw ValidationError("backward: batch size mismatch");
  if (X.cols() != net.input_dim()) throw ValidationError("backward: input dimension mismatch");
  const std::size_t L = net.layers.size();
  std::vector<Matrix> acts;  // acts[0] = X, acts[l + 1] = output of layer l
  acts.reserve(L + 1);
  acts.push_back(X);
  for (const auto& layer : net.layers) {
    Matrix z = acts.back() * layer.weights;
    z.rowwise() += layer.bias.transpose();
    detail::apply_activation(z, layer.activation);
    if (!z.allFinite()) throw NumericalError("backward: non-finite activations");
    acts.push_back(std::move(z));
  }
  const auto n = static_cast<Scalar>(X.rows());
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y_hat = acts.back().col(0);

  NetworkGradient<Scalar> grad;
  grad.loss = huber_loss(y, y_hat, delta);
  grad.weights.resize(L);
  grad.bias.resize(L);

  Matrix g(X.rows(), 1);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Scalar e = y_hat(i) - y(i);
    const Scalar slope = std::abs(e) <= delta ? e : (e > Scalar(0) ? delta : -delta);
    g(i, 0) = slope / n;
  }
  for (std::size_t l = L; l-- > 0;) {
    const auto& layer = net.layers[l];
    if (layer.activation == Activation::Relu)
      g = (acts[l + 1].array() > Scalar(0)).select(g, Scalar(0));
    grad.weights[l] = acts[l].transpose() * g;
    grad.bias[l] = g.colwise().sum().transpose();
    if (l > 0) g = g * layer.weights.transpose();
  }
  return grad;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> flatten_parameters(const DenseNetwork<Scalar>& net) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(net.num_params());
  Eigen::Index p = 0;
  for (const auto& l : net.layers) {
    out.segment(p, l.weights.size()) = l.weights.reshaped();
    p += l.weights.size();
    out.segment(p, l.bias.size()) = l.bias;
    p += l.bias.size();
  }
  return out;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> flatten_gradient(const NetworkGradient<Scalar>& g) {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) total += g.weights[l].size() + g.bias[l].size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(total);
  Eigen::Index p = 0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.segment(p, g.weights[l].size()) = g.weights[l].reshaped();
    p += g.weights[l].size();
    out.segment(p, g.bias[l].size()) = g.bias[l];
    p += g.bias[l].size();
  }
  return out;
}

template <class Scalar>
void assign_parameters(DenseNetwork<Scalar>& net, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& flat) {
  if (flat.size() != net.num_params()) throw ValidationError("parameter count mismatch");
  Eigen::Index p = 0;
  for (auto& l : net.layers) {
    l.weights.reshaped() = flat.segment(p, l.weights.size());
    p += l.weights.size();
    l.bias = flat.segment(p, l.bias.size());
    p += l.bias.size();
  }
}

template <class Scalar>
struct TrainConfig {
  std::vector<int> hidden = default_hidden_layers();
  Scalar learning_rate = Scalar(1e-3);
  int epochs = 200;
  Scalar huber_delta = Scalar(0.1);
  std::uint64_t seed = 0;
  // 0 = full batch. Otherwise rows are visited in a per-epoch seeded order.
  int batch_size = 0;
  bool plateau_stop = false;
  int plateau_window = 20;
  Scalar plateau_tolerance = Scalar(1e-5);

  void validate() const {
    if (!(learning_rate > Scalar(0))) throw ValidationError("learning rate must be positive");
    if (!(huber_delta > Scalar(0))) throw ValidationError("huber delta must be positive");
    if (epochs < 0) throw ValidationError("epochs must be non-negative");
    if (batch_size < 0) throw ValidationError("batch size must be non-negative");
  }
};

// Non-finite training loss. Carries the loss history up to the failure.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, std::vector<double> history)
      : NumericalError(what), history(std::move(history)) {}
  std::vector<double> history;
};

template <class Scalar>
struct TrainResult {
  DenseNetwork<Scalar> net;
  std::vector<Scalar> loss_history;  // full-data loss after each epoch; [0] is the initial loss
  bool stopped_on_plateau = false;
};

template <class Scalar>
TrainResult<Scalar> train_dnn(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y, const TrainConfig<Scalar>& config) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  config.validate();
  if (X.rows() != y.size() || X.rows() == 0) throw ValidationError("train_dnn: batch size mismatch");
  TrainResult<Scalar> result;
  result.net = make_network<Scalar>(X.cols(), config.hidden, config.seed);
  Vector params = flatten_parameters(result.net);
  AdamState<Scalar> adam(params.size(), config.learning_rate);
  Rng order_rng(derive_seed(config.seed, 1));
  const Eigen::Index n = X.rows();
  const Eigen::Index batch = config.batch_size == 0 ? n : std::min<Eigen::Index>(config.batch_size, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  auto full_loss = [&] {
    const Scalar loss = huber_loss(y, forward(result.net, X), config.huber_delta);
    if (!std::isfinite(static_cast<double>(loss))) {
      std::vector<double> history(result.loss_history.begin(), result.loss_history.end());
      history.push_back(static_cast<double>(loss));
      throw TrainingDiverged("train_dnn: non-finite loss", std::move(history));
    }
    return loss;
  };
  result.loss_history.push_back(full_loss());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch == n) {
      const auto g = backward(result.net, X, y, config.huber_delta);
      adam_step(adam, params, flatten_gradient(g));
      assign_parameters(result.net, params);
    } else {
      order_rng.shuffle(order);
      for (Eigen::Index start = 0; start < n; start += batch) {
        const Eigen::Index len = std::min(batch, n - start);
        Matrix Xb(len, X.cols());
        Vector yb(len);
        for (Eigen::Index r = 0; r < len; ++r) {
          const auto src = order[static_cast<std::size_t>(start + r)];
          Xb.row(r) = X.row(src);
          yb(r) = y(src);
        }
        const auto g = backward(result.net, Xb, yb, config.huber_delta);
        adam_step(adam, params, flatten_gradient(g));
        assign_parameters(result.net, params);
      }
    }
    result.loss_history.push_back(full_loss());
    if (config.plateau_stop && static_cast<int>(result.loss_history.size()) > config.plateau_window) {
      const Scalar past = result.loss_history[result.loss_history.size() - 1 - config.plateau_window];
      const Scalar now = result.loss_history.back();
      const Scalar denom = std::abs(past) > Scalar(0) ? std::abs(past) : Scalar(1);
      if ((past - now) / denom < config.plateau_tolerance) {
        result.stopped_on_plateau = true;
        break;
      }
    }
  }
  return result;
}

}  // namespace corrml
