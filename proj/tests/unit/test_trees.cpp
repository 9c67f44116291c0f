#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "corrml/errors.hpp"
#include "corrml/random.hpp"
#include "corrml/trees.hpp"

using namespace corrml;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

TEST(Tree, MemorizesDistinctInputs) {
  Rng rng(1);
  Matrix X(40, 3);
  Vector y(40);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < 40; ++i) y(i) = rng.normal();
  const auto t = fit_tree(X, y);
  EXPECT_EQ((t.predict(X) - y).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Tree, MidpointThresholdAndTies) {
  Matrix X(4, 2);
  X << 0, 7, 1, 7, 2, 7, 3, 7;
  Vector y(4);
  y << 0, 0, 1, 1;
  const auto t = fit_tree(X, y, {1, 1});
  ASSERT_EQ(t.nodes.size(), 3u);
  EXPECT_EQ(t.nodes[0].feature, 0);
  EXPECT_EQ(t.nodes[0].threshold, 1.5);
  EXPECT_EQ(t.depth(), 1);
  EXPECT_DOUBLE_EQ(t.nodes[0].impurity_decrease, 1.0);
}

TEST(Tree, DepthAndLeafLimits) {
  Matrix X(16, 1);
  Vector y(16);
  for (Eigen::Index i = 0; i < 16; ++i) X(i, 0) = y(i) = static_cast<double>(i);
  EXPECT_LE(fit_tree(X, y, {2, 1}).depth(), 2);
  const auto t = fit_tree(X, y, {-1, 4});
  for (const auto& n : t.nodes)
    if (n.is_leaf()) EXPECT_GE(n.samples, 4);
}

TEST(Tree, DuplicateRowsActAsWeights) {
  Matrix X(2, 1);
  X << 0, 1;
  Vector y(2);
  y << 0, 10;
  const auto t = fit_tree_rows(X, y, {0, 0, 0, 1}, {0, 1}, {});
  EXPECT_DOUBLE_EQ(t.nodes[0].value, 2.5);
  EXPECT_EQ(t.nodes[0].samples, 4);
}

TEST(MaxFeatures, Resolution) {
  EXPECT_EQ(MaxFeatures::parse("all").resolve(9), 9);
  EXPECT_EQ(MaxFeatures::parse("sqrt").resolve(9), 3);
  EXPECT_EQ(MaxFeatures::parse("third").resolve(9), 3);
  EXPECT_EQ(MaxFeatures::parse("third").resolve(2), 1);
  EXPECT_EQ(MaxFeatures::parse("4").resolve(9), 4);
  EXPECT_THROW(MaxFeatures::parse("many"), ValidationError);
}

TEST(Forest, BootstrapInBagFraction) {
  Rng rng(3);
  double total = 0.0;
  for (int t = 0; t < 200; ++t) {
    const auto rows = bootstrap_rows(500, rng);
    total += static_cast<double>(std::set<std::size_t>(rows.begin(), rows.end()).size()) / 500.0;
  }
  EXPECT_NEAR(total / 200.0, 1.0 - std::exp(-1.0), 0.01);
}

TEST(Forest, DeterministicAndImportance) {
  Rng rng(4);
  Matrix X(150, 4);
  Vector y(150);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < 150; ++i) y(i) = 5.0 * X(i, 2) + 0.05 * rng.normal();
  ForestConfig c;
  c.n_estimators = 30;
  c.max_features = MaxFeatures::parse("sqrt");
  c.seed = 12;
  const auto a = fit_forest(X, y, c), b = fit_forest(X, y, c);
  EXPECT_EQ(a.predict(X), b.predict(X));
  const Vector imp = feature_importance(a);
  EXPECT_NEAR(imp.sum(), 1.0, 1e-12);
  EXPECT_GT(imp(2), 0.8);
}

TEST(Gbm, TwoPointCaseExact) {
  Matrix X(2, 1);
  X << 0, 1;
  Vector y(2);
  y << 4, 6;
  const auto g = fit_gbm(X, y, {1, 0.5, {1, 1}, 0});
  const Vector p = g.predict(X);
  EXPECT_DOUBLE_EQ(p(0), 4.5);
  EXPECT_DOUBLE_EQ(p(1), 5.5);
}

TEST(Gbm, ResidualsShrinkMonotonically) {
  Rng rng(6);
  Matrix X(80, 2);
  Vector y(80);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
  for (Eigen::Index i = 0; i < 80; ++i) y(i) = std::sin(6 * X(i, 0)) + X(i, 1);
  double prev = INFINITY;
  for (int rounds : {1, 5, 20, 80}) {
    const double err = (fit_gbm(X, y, {rounds, 0.1, {3, 1}, 0}).predict(X) - y).squaredNorm();
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(MultiOutput, OneModelPerColumn) {
  Matrix X(10, 1);
  Matrix Y(10, 2);
  for (Eigen::Index i = 0; i < 10; ++i) {
    X(i, 0) = static_cast<double>(i);
    Y(i, 0) = static_cast<double>(i);
    Y(i, 1) = -static_cast<double>(i);
  }
  const auto m = fit_multi_output([](const Matrix& x, const Vector& y) { return fit_tree(x, y); }, X, Y, {"a", "b"});
  EXPECT_EQ(m.models.size(), 2u);
  EXPECT_TRUE(m.predict(X).isApprox(Y));
}
