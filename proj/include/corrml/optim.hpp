#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "corrml/errors.hpp"

namespace corrml {

// Adam with bias-corrected moments.
template <class Scalar>
struct AdamState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Vector m;
  Vector v;
  std::int64_t t = 0;
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);

  AdamState() = default;
  AdamState(Eigen::Index size, Scalar learning_rate)
      : m(Vector::Zero(size)), v(Vector::Zero(size)), lr(learning_rate) {}
};

// One in-place update of params. Throws NumericalError on non-finite
// gradients, leaving state and params untouched.
template <class Scalar, class Derived>
void adam_step(AdamState<Scalar>& state, Eigen::MatrixBase<Derived> const& params_,
               const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& grads) {
  auto& params = const_cast<Eigen::MatrixBase<Derived>&>(params_);
  if (params.size() != grads.size() || state.m.size() != grads.size() || state.v.size() != grads.size())
    throw ValidationError("adam_step: length mismatch");
  if (!grads.allFinite()) throw NumericalError("adam_step: non-finite gradient");
  ++state.t;
  state.m = state.beta1 * state.m + (Scalar(1) - state.beta1) * grads;
  state.v = state.beta2 * state.v + (Scalar(1) - state.beta2) * grads.cwiseAbs2();
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, static_cast<Scalar>(state.t));
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, static_cast<Scalar>(state.t));
  for (Eigen::Index i = 0; i < grads.size(); ++i) {
    const Scalar m_hat = state.m(i) / c1;
    const Scalar v_hat = state.v(i) / c2;
    params(i) -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace corrml
