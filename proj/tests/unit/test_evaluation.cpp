#include <gtest/gtest.h>

#include <cmath>

#include "corrml/evaluation.hpp"
#include "corrml/random.hpp"
#include "corrml/trees.hpp"

using namespace corrml;

TEST(Metrics, HandExample) {
  Eigen::VectorXd y(4), p(4);
  y << 1, 2, 3, 4;
  p << 1, 2, 3, 5;
  const auto m = compute_metrics(y, p);
  EXPECT_DOUBLE_EQ(m.mae, 0.25);
  EXPECT_DOUBLE_EQ(m.mse, 0.25);
  EXPECT_DOUBLE_EQ(m.rmse, 0.5);
  EXPECT_DOUBLE_EQ(*m.r2, 0.8);
}

TEST(Metrics, ConstantTruthHasNoR2) {
  Eigen::VectorXd y = Eigen::VectorXd::Constant(3, 2.0), p(3);
  p << 1, 2, 3;
  EXPECT_FALSE(compute_metrics(y, p).r2.has_value());
}

TEST(Metrics, MaeBoundedByRmse) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd y(10), p(10);
    for (int i = 0; i < 10; ++i) {
      y(i) = rng.normal();
      p(i) = rng.normal();
    }
    const auto m = compute_metrics(y, p);
    EXPECT_LE(m.mae, m.rmse + 1e-15);
    EXPECT_NEAR(m.rmse * m.rmse, m.mse, 1e-12);
  }
}

TEST(Grid, CartesianPoints) {
  Grid g;
  g.axes = {{"a", {1, 2}}, {"b", {10, 20, 30}}};
  const auto pts = g.points();
  ASSERT_EQ(pts.size(), 6u);
  EXPECT_EQ(pts[0].at("a"), 1);
  EXPECT_EQ(pts[0].at("b"), 10);
}

TEST(Grid, RankingTieBreaks) {
  GridPointResult a, b;
  a.point = {{"x", 1}};
  b.point = {{"x", 2}};
  a.mean_r2 = b.mean_r2 = 0.5;
  a.mean_rmse = b.mean_rmse = 1.0;
  EXPECT_TRUE(better_grid_point(a, b));
  EXPECT_FALSE(better_grid_point(b, a));
  b.mean_rmse = 0.9;
  EXPECT_TRUE(better_grid_point(b, a));
  a.mean_r2 = 0.6;
  EXPECT_TRUE(better_grid_point(a, b));
}

namespace {

struct DepthFamily {
  RandomForest fit(const ParamPoint& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   std::uint64_t seed) const {
    ForestConfig c;
    c.n_estimators = 10;
    c.limits.max_depth = static_cast<int>(p.at("max_depth"));
    c.seed = seed;
    return fit_forest(X, y, c);
  }
};

}  // namespace

// A step function with 8 plateaus needs depth 3; depth 1 underfits and the
// extra capacity of depth 6 only fits noise.
TEST(GridSearch, RecoversDepthOnStepData) {
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const int n = 160;
    Eigen::MatrixXd X(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.uniform();
      y(i) = std::floor(X(i, 0) * 8.0) + 0.05 * rng.normal();
    }
    Grid g;
    g.axes = {{"max_depth", {1, 3, 6}}};
    const auto res = grid_search(DepthFamily{}, g, X, y, kfold_plan(n, 5, seed), seed);
    hits += res.cv.best_point().at("max_depth") >= 3;
  }
  EXPECT_GE(hits, 8);
}
