#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "corrml/random.hpp"

namespace corrml {

struct TreeLimits {
  int max_depth = -1;  // -1 = unlimited
  int min_samples_leaf = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;           // mean target of the rows reaching this node
  double impurity_decrease = 0.0;  // SSE(parent) - SSE(left) - SSE(right)
  int samples = 0;

  bool is_leaf() const { return feature < 0; }
};

// Binary regression tree stored as a flat node array; node 0 is the root.
// Rows go left when x[feature] <= threshold.
struct DecisionTree {
  std::vector<TreeNode> nodes;
  int n_features = 0;

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
  int depth() const;
};

// Per-split candidate feature sampling. max_features >= n_features means all
// features are candidates and no random numbers are consumed.
struct FeatureSampler {
  int max_features = 0;  // 0 = all
  Rng* rng = nullptr;
};

// Greedy CART on squared error. Candidate thresholds are midpoints between
// consecutive distinct sorted values. Equal-gain ties go to the lowest
// feature index, then the lowest threshold.
DecisionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeLimits& limits = {},
                      FeatureSampler sampler = {});

// Fit on a row multiset given as indices into X (duplicates allowed).
DecisionTree fit_tree_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const std::vector<std::size_t>& rows, const TreeLimits& limits,
                           FeatureSampler sampler);

// Per-split feature subset size: all, sqrt(p), p/3 or a fixed count.
struct MaxFeatures {
  enum class Rule { All, Sqrt, Third, Count } rule = Rule::All;
  int count = 0;

  int resolve(int n_features) const;
  std::string to_string() const;
  static MaxFeatures parse(std::string_view token);
};

struct ForestConfig {
  int n_estimators = 100;
  TreeLimits limits{};
  MaxFeatures max_features{};
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

struct RandomForest {
  std::vector<DecisionTree> trees;
  ForestConfig config;
  std::vector<int> in_bag_unique;  // distinct rows drawn per tree
  int n_train = 0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// Bootstrap resample of size n with replacement.
std::vector<std::size_t> bootstrap_rows(std::size_t n, Rng& rng);

// Trees may be trained concurrently; per-tree streams are derived from the
// seed so the result equals sequential training.
RandomForest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestConfig& config);

// Mean decrease in squared error per feature, normalized per tree, averaged
// over trees and renormalized to sum to 1. All zeros if no tree split.
Eigen::VectorXd feature_importance(const RandomForest& forest);

struct GbmConfig {
  int n_rounds = 100;
  double learning_rate = 0.1;
  TreeLimits limits{3, 1};
  std::uint64_t seed = 0;
};

struct GradientBoostedTrees {
  double init = 0.0;  // mean of training targets
  std::vector<DecisionTree> stages;
  double learning_rate = 0.1;

  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

// Least-squares boosting: each stage fits the residuals of the current
// ensemble and is added with weight learning_rate.
GradientBoostedTrees fit_gbm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbmConfig& config);

// Independent copies of a base regressor, one per target column.
template <class Model>
struct MultiOutputModel {
  std::vector<std::string> targets;
  std::vector<Model> models;

  Eigen::MatrixXd predict(const Eigen::MatrixXd& X) const {
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(models.size()));
    for (std::size_t t = 0; t < models.size(); ++t) out.col(static_cast<Eigen::Index>(t)) = models[t].predict(X);
    return out;
  }
};

// fit(X, y_column) -> Model for each column of Y.
template <class Fit>
auto fit_multi_output(Fit&& fit, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                      std::vector<std::string> targets) {
  using Model = decltype(fit(X, Eigen::VectorXd(Y.col(0))));
  MultiOutputModel<Model> out;
  out.targets = std::move(targets);
  out.targets.resize(static_cast<std::size_t>(Y.cols()));
  for (Eigen::Index t = 0; t < Y.cols(); ++t) out.models.push_back(fit(X, Eigen::VectorXd(Y.col(t))));
  return out;
}

}  // namespace corrml
