#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "corrml/errors.hpp"
#include "corrml/optim.hpp"

using namespace corrml;

TEST(Adam, FirstStepMovesByLearningRate) {
  AdamState<double> s(2, 0.1);
  Eigen::VectorXd p(2), g(2);
  p << 1.0, -1.0;
  g << 3.0, -0.5;
  adam_step(s, p, g);
  EXPECT_NEAR(p(0), 0.9, 1e-8);
  EXPECT_NEAR(p(1), -0.9, 1e-8);
  EXPECT_EQ(s.t, 1);
}

TEST(Adam, MinimizesQuadratic) {
  AdamState<double> s(3, 0.05);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 4.0), target(3);
  target << 1.0, -2.0, 0.5;
  for (int i = 0; i < 2000; ++i) {
    const Eigen::VectorXd g = 2.0 * (p - target);
    adam_step(s, p, g);
  }
  EXPECT_LT((p - target).norm(), 1e-3);
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  AdamState<double> s(1, 0.1);
  Eigen::VectorXd p(1), g(1);
  p << 2.0;
  g << std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(adam_step(s, p, g), NumericalError);
  EXPECT_EQ(p(0), 2.0);
  EXPECT_EQ(s.t, 0);
  Eigen::VectorXd wrong(2);
  wrong.setOnes();
  EXPECT_THROW(adam_step(s, p, wrong), ValidationError);
}

TEST(Adam, WorksOnSegments) {
  AdamState<double> s(2, 0.1);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(4), g(2);
  g << 1.0, 1.0;
  adam_step(s, p.segment(1, 2), g);
  EXPECT_EQ(p(0), 0.0);
  EXPECT_NEAR(p(1), -0.1, 1e-8);
  EXPECT_EQ(p(3), 0.0);
}
