#include <gtest/gtest.h>

#include <cmath>

#include "corrml/errors.hpp"
#include "corrml/kernels.hpp"
#include "corrml/random.hpp"

using namespace corrml;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace {

Vector point(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Matrix random_inputs(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform(-2.0, 2.0);
  return X;
}

}  // namespace

TEST(Kernel, KnownValuesAtUnitDistance) {
  const Vector a = point({0.0}), b = point({1.0});
  EXPECT_NEAR(eval_kernel(a, b, KernelSpec<double>::rbf(1)), 0.606531, 1e-6);
  EXPECT_NEAR(eval_kernel(a, b, KernelSpec<double>::matern(1.5, 1)), 0.48335, 1e-5);
  EXPECT_NEAR(eval_kernel(a, b, KernelSpec<double>::matern(2.5, 1)), 0.52399, 1e-5);
  EXPECT_NEAR(eval_kernel(a, b, KernelSpec<double>::matern(0.5, 1)), std::exp(-1.0), 1e-15);
}

TEST(Kernel, VarianceAtZeroDistance) {
  const Vector a = point({0.3, -1.0});
  for (auto kind : {KernelKind::Rbf, KernelKind::Matern12, KernelKind::Matern32, KernelKind::Matern52})
    EXPECT_DOUBLE_EQ(eval_kernel(a, a, KernelSpec<double>::leaf(kind, 2, 0.7, 2.5)), 2.5);
}

TEST(Kernel, SumIsAdditive) {
  const Vector a = point({0.1, 0.4}), b = point({-0.3, 1.2});
  const auto r = KernelSpec<double>::rbf(2, 0.8, 1.5), m = KernelSpec<double>::matern(2.5, 2, 1.3, 0.5);
  EXPECT_NEAR(eval_kernel(a, b, KernelSpec<double>::sum(r, m)), eval_kernel(a, b, r) + eval_kernel(a, b, m),
              1e-15);
  EXPECT_EQ(KernelSpec<double>::sum(r, m).num_params(), 6);
}

TEST(Kernel, ArdScalingEquivalence) {
  Vector ls(2);
  ls << 0.5, 3.0;
  const auto ard = KernelSpec<double>::leaf(KernelKind::Matern32, ls, 1.0);
  const Vector a = point({1.0, 2.0}), b = point({0.2, -1.0});
  const Vector as = a.cwiseQuotient(ls), bs = b.cwiseQuotient(ls);
  EXPECT_NEAR(eval_kernel(a, b, ard), eval_kernel(as, bs, KernelSpec<double>::matern(1.5, 2)), 1e-15);
}

TEST(Kernel, GramSymmetricPsd) {
  const Matrix X = random_inputs(30, 3, 1);
  const auto spec = KernelSpec<double>::sum(KernelSpec<double>::rbf(3, 0.7), KernelSpec<double>::matern(0.5, 3));
  const Matrix K = gram(X, spec);
  EXPECT_EQ((K - K.transpose()).cwiseAbs().maxCoeff(), 0.0);
  Eigen::SelfAdjointEigenSolver<Matrix> es(K);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * es.eigenvalues().maxCoeff());
  EXPECT_TRUE(gram(X, X, spec).isApprox(K, 1e-14));
  for (Eigen::Index i = 0; i < 30; ++i)
    for (Eigen::Index j = 0; j < 30; ++j)
      EXPECT_NEAR(K(i, j), eval_kernel(Vector(X.row(i).transpose()), Vector(X.row(j).transpose()), spec), 1e-14);
}

TEST(Kernel, GramGradMatchesFiniteDifference) {
  const Matrix X = random_inputs(8, 2, 2);
  auto spec = KernelSpec<double>::sum(KernelSpec<double>::rbf(2, 0.9, 1.2), KernelSpec<double>::matern(1.5, 2, 1.4));
  const Vector theta = spec.log_params();
  const double h = 1e-6;
  for (Eigen::Index p = 0; p < spec.num_params(); ++p) {
    auto plus = spec, minus = spec;
    Vector t = theta;
    t(p) += h;
    plus.set_log_params(t);
    t(p) -= 2 * h;
    minus.set_log_params(t);
    const Matrix fd = (gram(X, plus) - gram(X, minus)) / (2 * h);
    EXPECT_LT((gram_grad(X, spec, p) - fd).cwiseAbs().maxCoeff(), 1e-7) << spec.param_name(p);
  }
}

TEST(Kernel, ContractionMatchesExplicit) {
  const Matrix X = random_inputs(12, 3, 3);
  const auto spec = KernelSpec<double>::sum(KernelSpec<double>::matern(2.5, 3, 0.6), KernelSpec<double>::matern(0.5, 3, 1.7));
  Matrix W = random_inputs(12, 12, 4);
  W = (W + W.transpose()).eval();
  const Vector c = contract_gram_grad(X, spec, W);
  for (Eigen::Index p = 0; p < spec.num_params(); ++p)
    EXPECT_NEAR(c(p), W.cwiseProduct(gram_grad(X, spec, p)).sum(), 1e-10);
}

TEST(Kernel, LogParamRoundTripAndNames) {
  auto spec = KernelSpec<double>::rbf(2, 0.5, 3.0);
  const Vector t = spec.log_params();
  EXPECT_NEAR(t(0), std::log(0.5), 1e-15);
  EXPECT_NEAR(t(2), std::log(3.0), 1e-15);
  spec.set_log_params(t);
  EXPECT_NEAR(spec.leaves()[0].variance, 3.0, 1e-15);
  EXPECT_EQ(spec.param_name(2), "k0.log_variance");
  EXPECT_EQ(spec.param_name(1), "k0.log_lengthscale[1]");
}

TEST(Kernel, InvalidSpecsRejected) {
  EXPECT_THROW(KernelSpec<double>::rbf(2, -1.0), ValidationError);
  EXPECT_THROW(KernelSpec<double>::rbf(2, 1.0, 0.0), ValidationError);
  EXPECT_THROW(KernelSpec<double>::matern(1.0, 2), ValidationError);
  EXPECT_THROW(KernelSpec<double>::sum(KernelSpec<double>::rbf(2), KernelSpec<double>::rbf(3)), ValidationError);
}

TEST(Cholesky, JitterLadderRescuesSingular) {
  Matrix K = Matrix::Ones(4, 4);
  const auto c = cholesky_jitter(K);
  EXPECT_GT(c.jitter, 0.0);
  Matrix fine = Matrix::Identity(3, 3);
  EXPECT_EQ(cholesky_jitter(fine).jitter, 0.0);
  Matrix neg = -Matrix::Identity(3, 3);
  EXPECT_THROW(cholesky_jitter(neg), NumericalError);
}

TEST(Kernel, FloatInstantiation) {
  const auto spec = KernelSpec<float>::rbf(2);
  Eigen::MatrixXf X(2, 2);
  X << 0, 0, 1, 0;
  EXPECT_NEAR(gram(X, spec)(0, 1), 0.606531f, 1e-6f);
}
