#pragma once

// Exact Gaussian process regression: constant mean, Gaussian likelihood,
// hyperparameters trained by Adam on the negative log marginal likelihood.
//
// The flat hyperparameter vector is
//   [kernel log-parameters..., ln noise_variance, constant_mean].

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>
#include <vector>

#include "corrml/errors.hpp"
#include "corrml/kernels.hpp"
#include "corrml/optim.hpp"

namespace corrml {

template <class Scalar>
struct GprModel {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix X;
  Vector y;
  KernelSpec<Scalar> spec;
  Scalar mean = Scalar(0);
  Scalar noise = Scalar(1);   // noise variance
  Scalar jitter = Scalar(0);  // extra diagonal applied during factorization
  Eigen::LLT<Matrix> llt;     // of K + (noise + jitter) I
  Vector alpha;               // (K + (noise + jitter) I)^-1 (y - mean)

  Matrix L() const { return llt.matrixL(); }
  Eigen::Index dim() const { return X.cols(); }
};

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pack_hyperparameters(const KernelSpec<Scalar>& spec,
                                                              Scalar noise, Scalar mean) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> theta(spec.num_params() + 2);
  theta.head(spec.num_params()) = spec.log_params();
  theta(spec.num_params()) = std::log(noise);
  theta(spec.num_params() + 1) = mean;
  return theta;
}

template <class Scalar>
void unpack_hyperparameters(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta,
                            KernelSpec<Scalar>& spec, Scalar& noise, Scalar& mean) {
  if (theta.size() != spec.num_params() + 2) throw ValidationError("hyperparameter count mismatch");
  spec.set_log_params(theta.head(spec.num_params()));
  noise = std::exp(theta(spec.num_params()));
  mean = theta(spec.num_params() + 1);
}

// Factorizes the training covariance and solves for alpha.
template <class Scalar>
GprModel<Scalar> condition_gpr(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                               const KernelSpec<Scalar>& spec, Scalar noise, Scalar mean,
                               const JitterLadder<Scalar>& ladder = {}) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (X.rows() != y.size()) throw ValidationError("gpr: X and y row counts differ");
  if (X.rows() == 0) throw ValidationError("gpr: no training data");
  if (!(noise > Scalar(0))) throw ValidationError("gpr: noise variance must be positive");
  GprModel<Scalar> m;
  m.X = X;
  m.y = y;
  m.spec = spec;
  m.noise = noise;
  m.mean = mean;
  Matrix K = gram(X, spec);
  K.diagonal().array() += noise;
  auto chol = cholesky_jitter(K, ladder);
  m.jitter = chol.jitter;
  m.llt = std::move(chol.llt);
  m.alpha = m.llt.solve((y.array() - mean).matrix());
  if (!m.alpha.allFinite()) throw NumericalError("gpr: non-finite solve");
  return m;
}

template <class Scalar>
Scalar nlml_of(const GprModel<Scalar>& m) {
  const Eigen::Index n = m.y.size();
  const Scalar quad = Scalar(0.5) * (m.y.array() - m.mean).matrix().dot(m.alpha);
  const Scalar logdet_half = m.llt.matrixLLT().diagonal().array().log().sum();
  return quad + logdet_half + Scalar(0.5) * static_cast<Scalar>(n) * std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
}

// Negative log marginal likelihood at the given hyperparameters.
template <class Scalar>
Scalar nlml(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
            const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y, const KernelSpec<Scalar>& spec,
            Scalar noise, Scalar mean, const JitterLadder<Scalar>& ladder = {}) {
  return nlml_of(condition_gpr(X, y, spec, noise, mean, ladder));
}

template <class Scalar>
struct NlmlEvaluation {
  Scalar value;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gradient;  // over the flat hyperparameter vector
};

// Gradient from 0.5 * tr((Kt^-1 - alpha alpha^T) dKt/dtheta), with
// dKt/d(ln noise) = noise * I and dNLML/d(mean) = -sum(alpha).
template <class Scalar>
NlmlEvaluation<Scalar> nlml_grad_of(const GprModel<Scalar>& m) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = m.y.size();
  const Eigen::Index P = m.spec.num_params();
  Matrix W = m.llt.solve(Matrix::Identity(n, n));
  W.noalias() -= m.alpha * m.alpha.transpose();
  NlmlEvaluation<Scalar> out;
  out.value = nlml_of(m);
  out.gradient.resize(P + 2);
  out.gradient.head(P) = Scalar(0.5) * contract_gram_grad(m.X, m.spec, W);
  out.gradient(P) = Scalar(0.5) * W.trace() * m.noise;
  out.gradient(P + 1) = -m.alpha.sum();
  return out;
}

template <class Scalar>
NlmlEvaluation<Scalar> nlml_grad(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                                 const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                                 const KernelSpec<Scalar>& spec, Scalar noise, Scalar mean,
                                 const JitterLadder<Scalar>& ladder = {}) {
  return nlml_grad_of(condition_gpr(X, y, spec, noise, mean, ladder));
}

template <class Scalar>
struct GprFitOptions {
  int epochs = 200;
  Scalar learning_rate = Scalar(0.05);
  // When true: lengthscales 1, total signal variance var(y) split evenly
  // across sum components, noise 0.1 var(y), mean = mean(y). When false the
  // template's kernel values are kept and noise/mean below are used.
  bool init_from_data = true;
  Scalar initial_noise = Scalar(0.1);
  Scalar initial_mean = Scalar(0);
  JitterLadder<Scalar> ladder{};
};

template <class Scalar>
struct GprFit {
  GprModel<Scalar> model;
  std::vector<Scalar> nlml_history;  // one entry per evaluated epoch
  int epochs_run = 0;
  bool halted_early = false;
};

template <class Scalar>
GprFit<Scalar> fit_gpr(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                       const KernelSpec<Scalar>& spec_template, const GprFitOptions<Scalar>& options = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (X.rows() < 2) throw ValidationError("fit_gpr needs at least 2 training rows");
  if (X.cols() != spec_template.dim()) throw ValidationError("fit_gpr: kernel dimension mismatch");
  if (options.epochs < 0) throw ValidationError("fit_gpr: epochs must be non-negative");
  if (!y.allFinite()) throw ValidationError("fit_gpr: non-finite targets");

  KernelSpec<Scalar> spec = spec_template;
  Scalar noise = options.initial_noise, mean = options.initial_mean;
  if (options.init_from_data) {
    mean = y.mean();
    Scalar var = (y.array() - mean).square().mean();
    if (!(var > Scalar(0))) var = Scalar(1);
    const auto parts = static_cast<Scalar>(spec.leaves().size());
    for (auto& leaf : spec.leaves()) {
      leaf.lengthscales.setOnes();
      leaf.variance = var / parts;
    }
    noise = Scalar(0.1) * var;
  }

  GprFit<Scalar> fit;
  Vector theta = pack_hyperparameters(spec, noise, mean);
  std::optional<GprModel<Scalar>> last_valid;
  AdamState<Scalar> adam(theta.size(), options.learning_rate);

  auto condition_at = [&](const Vector& th) {
    KernelSpec<Scalar> s = spec;
    Scalar nz, mu;
    unpack_hyperparameters(th, s, nz, mu);
    return condition_gpr(X, y, s, nz, mu, options.ladder);
  };

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    NlmlEvaluation<Scalar> eval;
    try {
      GprModel<Scalar> m = condition_at(theta);
      eval = nlml_grad_of(m);
      if (!std::isfinite(static_cast<double>(eval.value)) || !eval.gradient.allFinite())
        throw NumericalError("non-finite marginal likelihood");
      last_valid = std::move(m);
    } catch (const NumericalError&) {
      fit.halted_early = true;
      break;
    }
    fit.nlml_history.push_back(eval.value);
    adam_step(adam, theta, eval.gradient);
    fit.epochs_run = epoch + 1;
  }

  if (!fit.halted_early) {
    try {
      GprModel<Scalar> m = condition_at(theta);
      const Scalar v = nlml_of(m);
      if (!std::isfinite(static_cast<double>(v))) throw NumericalError("non-finite marginal likelihood");
      last_valid = std::move(m);
    } catch (const NumericalError&) {
      fit.halted_early = true;
    }
  }
  if (!last_valid) throw NumericalError("fit_gpr: no valid hyperparameter state reached");
  fit.model = std::move(*last_valid);
  return fit;
}

enum class PredictiveVariance { Latent, Noisy };

template <class Scalar>
struct GprPrediction {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> variance;
};

template <class Scalar>
GprPrediction<Scalar> predict_gpr(const GprModel<Scalar>& m,
                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Xs,
                                  PredictiveVariance kind = PredictiveVariance::Noisy) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (Xs.cols() != m.dim()) throw ValidationError("predict_gpr: feature count does not match training data");
  const Matrix Ks = gram(m.X, Xs, m.spec);
  GprPrediction<Scalar> out;
  out.mean = (Ks.transpose() * m.alpha).array() + m.mean;
  const Matrix V = m.llt.matrixL().solve(Ks);
  const Scalar prior = m.spec.total_variance();
  out.variance = (prior - V.colwise().squaredNorm().array()).matrix().transpose();
  const Scalar floor = std::numeric_limits<Scalar>::min();
  for (Eigen::Index i = 0; i < out.variance.size(); ++i) {
    Scalar v = std::max(out.variance(i), Scalar(0));
    if (kind == PredictiveVariance::Noisy) v += m.noise;
    out.variance(i) = std::max(v, floor);
  }
  return out;
}

enum class BackTransform { Median, Mean };

inline BackTransform parse_back_transform(std::string_view token) {
  if (token == "median") return BackTransform::Median;
  if (token == "mean") return BackTransform::Mean;
  throw ValidationError("unknown back-transform '" + std::string(token) + "'");
}

inline std::string_view to_string(BackTransform mode) {
  return mode == BackTransform::Median ? "median" : "mean";
}

// Median: exp(mu) - eps. Mean: exp(mu + var/2) - eps. Clamped at 0.
template <class Scalar>
Scalar log_normal_back_transform(Scalar mu, Scalar var, Scalar eps, BackTransform mode) {
  const Scalar raw = mode == BackTransform::Median ? std::exp(mu) : std::exp(mu + Scalar(0.5) * var);
  return std::max(raw - eps, Scalar(0));
}

template <class Scalar>
struct LogGprModel {
  GprModel<Scalar> inner;  // trained on ln(y + eps)
  Scalar eps = Scalar(1e-6);
  BackTransform back_transform = BackTransform::Median;
};

template <class Scalar>
struct LogGprFit {
  LogGprModel<Scalar> model;
  std::vector<Scalar> nlml_history;
  bool halted_early = false;
};

template <class Scalar>
LogGprFit<Scalar> fit_log_gpr(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
                              const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& y,
                              const KernelSpec<Scalar>& spec_template,
                              const GprFitOptions<Scalar>& options = {}, Scalar eps = Scalar(1e-6),
                              BackTransform mode = BackTransform::Median) {
  if (!(eps >= Scalar(0))) throw ValidationError("fit_log_gpr: eps must be non-negative");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const Scalar shifted = y(i) + eps;
    if (!(shifted > Scalar(0))) throw ValidationError("fit_log_gpr: targets must satisfy y + eps > 0");
    z(i) = std::log(shifted);
  }
  auto inner = fit_gpr(X, z, spec_template, options);
  LogGprFit<Scalar> out;
  out.model.inner = std::move(inner.model);
  out.model.eps = eps;
  out.model.back_transform = mode;
  out.nlml_history = std::move(inner.nlml_history);
  out.halted_early = inner.halted_early;
  return out;
}

template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> predict_log_gpr(
    const LogGprModel<Scalar>& m, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& Xs) {
  const auto p = predict_gpr(m.inner, Xs, PredictiveVariance::Noisy);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(p.mean.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = log_normal_back_transform(p.mean(i), p.variance(i), m.eps, m.back_transform);
  return out;
}

}  // namespace corrml
