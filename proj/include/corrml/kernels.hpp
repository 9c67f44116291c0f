#pragma once

// Stationary ARD covariance functions (RBF and half-integer Matérn), sums of
// them, Gram assembly, analytic log-hyperparameter derivatives and a
// jitter-stabilized Cholesky factorization.
//
// Hyperparameters are exposed in log space. For a spec with leaves
// k_1 + ... + k_m over D inputs the flat parameter vector is
//   [ln l_{1,1} .. ln l_{1,D}, ln s2_1, ln l_{2,1} .. ln s2_2, ...].

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "corrml/errors.hpp"

namespace corrml {

enum class KernelKind { Rbf, Matern12, Matern32, Matern52 };

inline std::string_view kernel_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::Rbf: return "rbf";
    case KernelKind::Matern12:
    case KernelKind::Matern32:
    case KernelKind::Matern52: return "matern";
  }
  return "rbf";
}

inline double matern_nu(KernelKind kind) {
  switch (kind) {
    case KernelKind::Matern12: return 0.5;
    case KernelKind::Matern32: return 1.5;
    case KernelKind::Matern52: return 2.5;
    default: return 0.0;
  }
}

inline KernelKind matern_kind(double nu) {
  if (nu == 0.5) return KernelKind::Matern12;
  if (nu == 1.5) return KernelKind::Matern32;
  if (nu == 2.5) return KernelKind::Matern52;
  throw ValidationError("Matern smoothness must be 0.5, 1.5 or 2.5");
}

template <class Scalar>
struct LeafKernel {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  KernelKind kind = KernelKind::Rbf;
  Vector lengthscales;
  Scalar variance = Scalar(1);

  // Kernel value from the squared ARD-scaled distance.
  Scalar value(Scalar r2) const {
    using std::exp;
    using std::sqrt;
    switch (kind) {
      case KernelKind::Rbf: return variance * exp(Scalar(-0.5) * r2);
      case KernelKind::Matern12: return variance * exp(-sqrt(r2));
      case KernelKind::Matern32: {
        const Scalar a = sqrt(Scalar(3) * r2);
        return variance * (Scalar(1) + a) * exp(-a);
      }
      case KernelKind::Matern52: {
        const Scalar a = sqrt(Scalar(5) * r2);
        return variance * (Scalar(1) + a + Scalar(5) * r2 / Scalar(3)) * exp(-a);
      }
    }
    return Scalar(0);
  }

  // g(r2) such that dk/d(ln l_d) = g * (x_d - x'_d)^2 / l_d^2.
  Scalar lengthscale_factor(Scalar r2) const {
    using std::exp;
    using std::sqrt;
    switch (kind) {
      case KernelKind::Rbf: return variance * exp(Scalar(-0.5) * r2);
      case KernelKind::Matern12: {
        const Scalar r = sqrt(r2);
        return r > Scalar(0) ? variance * exp(-r) / r : Scalar(0);
      }
      case KernelKind::Matern32:
        return Scalar(3) * variance * exp(-sqrt(Scalar(3) * r2));
      case KernelKind::Matern52: {
        const Scalar a = sqrt(Scalar(5) * r2);
        return Scalar(5) / Scalar(3) * variance * (Scalar(1) + a) * exp(-a);
      }
    }
    return Scalar(0);
  }
};

template <class Scalar>
class KernelSpec {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Leaf = LeafKernel<Scalar>;

  KernelSpec() = default;

  static KernelSpec leaf(KernelKind kind, Eigen::Index dim, Scalar lengthscale = Scalar(1),
                         Scalar variance = Scalar(1)) {
    KernelSpec k;
    k.leaves_.push_back({kind, Vector::Constant(dim, lengthscale), variance});
    k.validate();
    return k;
  }
  static KernelSpec leaf(KernelKind kind, const Vector& lengthscales, Scalar variance) {
    KernelSpec k;
    k.leaves_.push_back({kind, lengthscales, variance});
    k.validate();
    return k;
  }
  static KernelSpec rbf(Eigen::Index dim, Scalar lengthscale = Scalar(1), Scalar variance = Scalar(1)) {
    return leaf(KernelKind::Rbf, dim, lengthscale, variance);
  }
  static KernelSpec matern(double nu, Eigen::Index dim, Scalar lengthscale = Scalar(1),
                           Scalar variance = Scalar(1)) {
    return leaf(matern_kind(nu), dim, lengthscale, variance);
  }
  static KernelSpec sum(const KernelSpec& left, const KernelSpec& right) {
    if (left.dim() != right.dim()) throw ValidationError("sum kernel: dimension mismatch");
    KernelSpec k = left;
    k.leaves_.insert(k.leaves_.end(), right.leaves_.begin(), right.leaves_.end());
    return k;
  }

  const std::vector<Leaf>& leaves() const { return leaves_; }
  std::vector<Leaf>& leaves() { return leaves_; }
  bool is_sum() const { return leaves_.size() > 1; }
  Eigen::Index dim() const { return leaves_.empty() ? 0 : leaves_.front().lengthscales.size(); }
  Eigen::Index num_params() const {
    return static_cast<Eigen::Index>(leaves_.size()) * (dim() + 1);
  }
  Scalar total_variance() const {
    Scalar v(0);
    for (const auto& l : leaves_) v += l.variance;
    return v;
  }

  void validate() const {
    if (leaves_.empty()) throw ValidationError("kernel spec has no components");
    for (const auto& l : leaves_) {
      if (l.lengthscales.size() != dim() || dim() == 0)
        throw ValidationError("kernel lengthscale count must equal the input dimension");
      if (!((l.lengthscales.array() > Scalar(0)).all()) || !l.lengthscales.allFinite())
        throw ValidationError("kernel lengthscales must be positive");
      if (!(l.variance > Scalar(0)) || !std::isfinite(static_cast<double>(l.variance)))
        throw ValidationError("kernel variance must be positive");
    }
  }

  Vector log_params() const {
    Vector theta(num_params());
    Eigen::Index p = 0;
    for (const auto& l : leaves_) {
      theta.segment(p, dim()) = l.lengthscales.array().log().matrix();
      p += dim();
      theta(p++) = std::log(l.variance);
    }
    return theta;
  }

  void set_log_params(const Vector& theta) {
    if (theta.size() != num_params()) throw ValidationError("kernel parameter count mismatch");
    Eigen::Index p = 0;
    for (auto& l : leaves_) {
      l.lengthscales = theta.segment(p, dim()).array().exp().matrix();
      p += dim();
      l.variance = std::exp(theta(p++));
    }
  }

  // Human-readable parameter id, e.g. "k0.log_lengthscale[3]".
  std::string param_name(Eigen::Index p) const {
    if (p < 0 || p >= num_params()) throw ValidationError("unknown kernel parameter id");
    const Eigen::Index per = dim() + 1;
    const auto leaf = p / per, local = p % per;
    std::string base = "k" + std::to_string(leaf) + ".";
    return local == dim() ? base + "log_variance"
                          : base + "log_lengthscale[" + std::to_string(local) + "]";
  }

 private:
  std::vector<Leaf> leaves_;
};

namespace detail {

template <class Scalar, class A, class B>
Scalar scaled_sq_dist(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y,
                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lengthscales) {
  Scalar r2(0);
  for (Eigen::Index d = 0; d < lengthscales.size(); ++d) {
    const Scalar t = (x(d) - y(d)) / lengthscales(d);
    r2 += t * t;
  }
  return r2;
}

// Rows of X divided column-wise by the lengthscales.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> scale_inputs(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lengthscales) {
  return (X.array().rowwise() / lengthscales.transpose().array()).matrix();
}

}  // namespace detail

template <class Scalar, class A, class B>
Scalar eval_kernel(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y,
                   const KernelSpec<Scalar>& spec) {
  if (x.size() != spec.dim() || y.size() != spec.dim())
    throw ValidationError("eval_kernel: input dimension does not match kernel");
  spec.validate();
  Scalar k(0);
  for (const auto& leaf : spec.leaves())
    k += leaf.value(detail::scaled_sq_dist<Scalar>(x, y, leaf.lengthscales));
  return k;
}

namespace detail {

// R(i, j) = |A.row(i) - B.row(j)|^2 by direct differences.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sq_dist(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& B) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix R = Matrix::Zero(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j)
    for (Eigen::Index d = 0; d < A.cols(); ++d) R.col(j).array() += (A.col(d).array() - B(j, d)).square();
  return R;
}

// Lower triangle (diagonal included) of the symmetric distance matrix; the
// strict upper triangle is left at zero.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sq_dist_lower(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& A) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = A.rows();
  Matrix R = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index d = 0; d < A.cols(); ++d)
      R.col(j).tail(n - j - 1).array() += (A.col(d).tail(n - j - 1).array() - A(j, d)).square();
  return R;
}

template <class Scalar>
void symmetrize_from_lower(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M) {
  M.template triangularView<Eigen::StrictlyUpper>() = M.transpose();
}

}  // namespace detail

// K(i, j) = k(X1.row(i), X2.row(j)).
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X1,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X2, const KernelSpec<Scalar>& spec) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (X1.cols() != spec.dim() || X2.cols() != spec.dim())
    throw ValidationError("gram: input dimension does not match kernel");
  spec.validate();
  Matrix K = Matrix::Zero(X1.rows(), X2.rows());
  for (const auto& leaf : spec.leaves()) {
    const Matrix R = detail::sq_dist(detail::scale_inputs(X1, leaf.lengthscales),
                                     detail::scale_inputs(X2, leaf.lengthscales));
    K += R.unaryExpr([&](Scalar r2) { return leaf.value(r2); });
  }
  return K;
}

// Symmetric Gram of one input set; only the lower triangle is evaluated.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X, const KernelSpec<Scalar>& spec) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (X.cols() != spec.dim()) throw ValidationError("gram: input dimension does not match kernel");
  spec.validate();
  const Eigen::Index n = X.rows();
  Matrix K = Matrix::Zero(n, n);
  for (const auto& leaf : spec.leaves()) {
    const Matrix R = detail::sq_dist_lower(detail::scale_inputs(X, leaf.lengthscales));
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j; i < n; ++i) K(i, j) += leaf.value(R(i, j));
  }
  detail::symmetrize_from_lower(K);
  return K;
}

// dK/d(theta_param) for the flat log-parameter index.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram_grad(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X, const KernelSpec<Scalar>& spec,
    Eigen::Index param) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (param < 0 || param >= spec.num_params()) throw ValidationError("gram_grad: unknown parameter id");
  if (X.cols() != spec.dim()) throw ValidationError("gram_grad: input dimension does not match kernel");
  const Eigen::Index per = spec.dim() + 1;
  const auto& leaf = spec.leaves()[static_cast<std::size_t>(param / per)];
  const Eigen::Index local = param % per;
  KernelSpec<Scalar> single;
  single.leaves().push_back(leaf);
  if (local == spec.dim()) return gram(X, single);

  const Eigen::Index n = X.rows();
  const Matrix A = detail::scale_inputs(X, leaf.lengthscales);
  Matrix G = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      Scalar r2(0);
      for (Eigen::Index d = 0; d < spec.dim(); ++d) {
        const Scalar t = A(i, d) - A(j, d);
        r2 += t * t;
      }
      const Scalar s = A(i, local) - A(j, local);
      G(i, j) = G(j, i) = leaf.lengthscale_factor(r2) * s * s;
    }
  }
  return G;
}

// out(p) = sum_ij W(i, j) * dK(i, j)/d(theta_p). Equivalent to
// (W.cwiseProduct(gram_grad(X, spec, p))).sum(). The lengthscale terms use
// sum_ij M_ij (a_i - a_j)^2 = 2 sum_i a_i^2 rowsum(M)_i - 2 a' M a for
// symmetric M, which turns the contraction into one matrix product.
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> contract_gram_grad(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& X, const KernelSpec<Scalar>& spec,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& W) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  const Eigen::Index n = X.rows(), D = spec.dim();
  const Matrix Ws = Scalar(0.5) * (W + W.transpose());
  Vector out = Vector::Zero(spec.num_params());
  Eigen::Index offset = 0;
  for (const auto& leaf : spec.leaves()) {
    const Matrix A = detail::scale_inputs(X, leaf.lengthscales);
    const Matrix R = detail::sq_dist_lower(A);
    Matrix M(n, n);
    Scalar var_acc(0);
    for (Eigen::Index j = 0; j < n; ++j) {
      var_acc += Ws(j, j) * leaf.value(Scalar(0));
      M(j, j) = Scalar(0);
      for (Eigen::Index i = j + 1; i < n; ++i) {
        const Scalar r2 = R(i, j);
        var_acc += Scalar(2) * Ws(i, j) * leaf.value(r2);
        M(i, j) = Ws(i, j) * leaf.lengthscale_factor(r2);
      }
    }
    detail::symmetrize_from_lower(M);
    const Vector m = M.rowwise().sum();
    const Matrix MA = M * A;
    for (Eigen::Index d = 0; d < D; ++d)
      out(offset + d) = Scalar(2) * (A.col(d).array().square() * m.array()).sum() -
                        Scalar(2) * A.col(d).dot(MA.col(d));
    out(offset + D) = var_acc;
    offset += D + 1;
  }
  return out;
}

template <class Scalar>
struct JitterLadder {
  // Multiples of the mean diagonal, tried in order.
  std::vector<Scalar> steps{Scalar(0), Scalar(1e-8), Scalar(1e-6), Scalar(1e-4)};
};

template <class Scalar>
struct JitteredCholesky {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Eigen::LLT<Matrix> llt;
  Scalar jitter = Scalar(0);  // absolute amount added to the diagonal

  Matrix L() const { return llt.matrixL(); }
};

// Factorizes K + j*I for the first ladder step that succeeds. Throws
// NumericalError if every step fails.
template <class Scalar>
JitteredCholesky<Scalar> cholesky_jitter(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& K,
                                         const JitterLadder<Scalar>& ladder = {}) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (K.rows() != K.cols()) throw ValidationError("cholesky_jitter: matrix is not square");
  if (!K.allFinite()) throw NumericalError("cholesky_jitter: non-finite matrix entries");
  const Scalar mean_diag = K.rows() > 0 ? K.diagonal().mean() : Scalar(1);
  const Scalar scale = mean_diag > Scalar(0) ? mean_diag : Scalar(1);
  JitteredCholesky<Scalar> out;
  for (Scalar step : ladder.steps) {
    const Scalar j = step * scale;
    Matrix A = K;
    A.diagonal().array() += j;
    out.llt.compute(A);
    if (out.llt.info() == Eigen::Success) {
      out.jitter = j;
      return out;
    }
  }
  throw NumericalError("cholesky_jitter: factorization failed at maximum jitter");
}

}  // namespace corrml
