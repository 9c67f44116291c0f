#include "corrml/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "corrml/errors.hpp"
#include "corrml/parallel.hpp"

namespace corrml {

double DecisionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  if (nodes.empty()) throw ValidationError("predict on an empty tree");
  int i = 0;
  while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes[static_cast<std::size_t>(i)];
    i = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(i)].value;
}

Eigen::VectorXd DecisionTree::predict(const Eigen::MatrixXd& X) const {
  if (X.cols() != n_features) throw ValidationError("tree predict: feature count mismatch");
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index r = 0; r < X.rows(); ++r) out(r) = predict_row(X.row(r));
  return out;
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeLimits& limits,
              FeatureSampler sampler)
      : X_(X), y_(y), limits_(limits), sampler_(sampler) {
    tree_.n_features = static_cast<int>(X.cols());
  }

  DecisionTree build(const std::vector<std::size_t>& rows) {
    const auto p = static_cast<std::size_t>(tree_.n_features);
    sorted_.assign(p, rows);
    for (std::size_t f = 0; f < p; ++f)
      std::stable_sort(sorted_[f].begin(), sorted_[f].end(), [&](std::size_t a, std::size_t b) {
        return X_(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(f)) <
               X_(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(f));
      });
    goes_left_.assign(static_cast<std::size_t>(X_.rows()), 0);
    scratch_.resize(rows.size());
    tree_.nodes.emplace_back();
    grow(0, 0, rows.size(), 0);
    return std::move(tree_);
  }

 private:
  // Rows of a node occupy [begin, end) of every per-feature sorted list.
  void grow(std::size_t node, std::size_t begin, std::size_t end, int depth) {
    const auto& rows = sorted_[0];
    const std::size_t m = end - begin;
    double sum = 0.0;
    for (std::size_t i = begin; i < end; ++i) sum += y_(static_cast<Eigen::Index>(rows[i]));
    tree_.nodes[node].value = sum / static_cast<double>(m);
    tree_.nodes[node].samples = static_cast<int>(m);

    const bool depth_ok = limits_.max_depth < 0 || depth < limits_.max_depth;
    const auto min_leaf = static_cast<std::size_t>(std::max(1, limits_.min_samples_leaf));
    if (!depth_ok || m < 2 * min_leaf || constant_target(begin, end)) return;

    const Split split = best_split(begin, end, min_leaf);
    if (split.feature < 0 || !(split.gain > 0.0)) return;

    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t r = rows[i];
      const bool left = X_(static_cast<Eigen::Index>(r), split.feature) <= split.threshold;
      goes_left_[r] = left;
      n_left += left;
    }
    if (n_left == 0 || n_left == m) return;
    for (auto& list : sorted_) {
      std::size_t l = begin, r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        if (goes_left_[list[i]])
          list[l++] = list[i];
        else
          scratch_[r++] = list[i];
      }
      std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                list.begin() + static_cast<std::ptrdiff_t>(l));
    }

    const auto l = tree_.nodes.size();
    tree_.nodes.emplace_back();
    tree_.nodes.emplace_back();
    auto& n = tree_.nodes[node];
    n.feature = split.feature;
    n.threshold = split.threshold;
    n.impurity_decrease = split.gain;
    n.left = static_cast<int>(l);
    n.right = static_cast<int>(l + 1);
    grow(l, begin, begin + n_left, depth + 1);
    grow(l + 1, begin + n_left, end, depth + 1);
  }

  bool constant_target(std::size_t begin, std::size_t end) const {
    const auto& rows = sorted_[0];
    const double first = y_(static_cast<Eigen::Index>(rows[begin]));
    return std::all_of(rows.begin() + static_cast<std::ptrdiff_t>(begin), rows.begin() + static_cast<std::ptrdiff_t>(end),
                       [&](std::size_t r) { return y_(static_cast<Eigen::Index>(r)) == first; });
  }

  bool constant_feature(std::size_t begin, std::size_t end, int f) const {
    const auto& list = sorted_[static_cast<std::size_t>(f)];
    return X_(static_cast<Eigen::Index>(list[begin]), f) == X_(static_cast<Eigen::Index>(list[end - 1]), f);
  }

  // Best split on one feature. Gain uses the identity
  // SSE(parent) - SSE(L) - SSE(R) = nL nR / n (mean_L - mean_R)^2.
  Split scan_feature(std::size_t begin, std::size_t end, int f, std::size_t min_leaf) const {
    const auto& list = sorted_[static_cast<std::size_t>(f)];
    auto x = [&](std::size_t i) { return X_(static_cast<Eigen::Index>(list[begin + i]), f); };
    auto t = [&](std::size_t i) { return y_(static_cast<Eigen::Index>(list[begin + i])); };
    const std::size_t m = end - begin;
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += t(i);
    Split best;
    best.feature = f;
    double left_sum = 0.0;
    for (std::size_t i = 1; i < m; ++i) {
      left_sum += t(i - 1);
      if (i < min_leaf || m - i < min_leaf) continue;
      const double lo = x(i - 1), hi = x(i);
      if (!(lo < hi)) continue;
      const double nl = static_cast<double>(i), nr = static_cast<double>(m - i);
      const double diff = left_sum / nl - (total - left_sum) / nr;
      const double gain = nl * nr / static_cast<double>(m) * diff * diff;
      if (gain > best.gain) {
        double mid = lo + (hi - lo) / 2.0;
        if (!(mid < hi)) mid = lo;
        best.gain = gain;
        best.threshold = mid;
      }
    }
    return best;
  }

  Split best_split(std::size_t begin, std::size_t end, std::size_t min_leaf) {
    const int p = tree_.n_features;
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    const bool sample = sampler_.max_features > 0 && sampler_.max_features < p;
    if (sample) {
      if (!sampler_.rng) throw ValidationError("feature sampling requires an RNG");
      sampler_.rng->shuffle(order);
    }
    // Keep drawing features until max_features non-constant ones were scanned.
    std::vector<Split> candidates;
    int informative = 0;
    for (int f : order) {
      if (sample && informative >= sampler_.max_features) break;
      if (constant_feature(begin, end, f)) continue;
      ++informative;
      candidates.push_back(scan_feature(begin, end, f, min_leaf));
    }
    Split best;
    for (const auto& c : candidates) {
      if (c.gain > best.gain || (c.gain == best.gain && c.gain > 0.0 && c.feature < best.feature)) best = c;
    }
    return best;
  }

  const Eigen::MatrixXd& X_;
  const Eigen::VectorXd& y_;
  TreeLimits limits_;
  FeatureSampler sampler_;
  DecisionTree tree_;
  std::vector<std::vector<std::size_t>> sorted_;
  std::vector<char> goes_left_;
  std::vector<std::size_t> scratch_;
};

void check_xy(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() == 0 || X.cols() == 0) throw ValidationError("tree fit: empty data");
  if (X.rows() != y.size()) throw ValidationError("tree fit: X and y row counts differ");
  if (!X.allFinite() || !y.allFinite()) throw ValidationError("tree fit: non-finite data");
}

}  // namespace

DecisionTree fit_tree_rows(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                           const std::vector<std::size_t>& rows, const TreeLimits& limits,
                           FeatureSampler sampler) {
  check_xy(X, y);
  if (rows.empty()) throw ValidationError("tree fit: empty data");
  return TreeBuilder(X, y, limits, sampler).build(rows);
}

DecisionTree fit_tree(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const TreeLimits& limits,
                      FeatureSampler sampler) {
  check_xy(X, y);
  std::vector<std::size_t> rows(static_cast<std::size_t>(X.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  return TreeBuilder(X, y, limits, sampler).build(std::move(rows));
}

int MaxFeatures::resolve(int n_features) const {
  switch (rule) {
    case Rule::All: return n_features;
    case Rule::Sqrt: return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_features)))));
    case Rule::Third: return std::max(1, n_features / 3);
    case Rule::Count: return std::clamp(count, 1, n_features);
  }
  return n_features;
}

std::string MaxFeatures::to_string() const {
  switch (rule) {
    case Rule::All: return "all";
    case Rule::Sqrt: return "sqrt";
    case Rule::Third: return "third";
    case Rule::Count: return std::to_string(count);
  }
  return "all";
}

MaxFeatures MaxFeatures::parse(std::string_view token) {
  if (token == "all") return {Rule::All, 0};
  if (token == "sqrt") return {Rule::Sqrt, 0};
  if (token == "third") return {Rule::Third, 0};
  int count = 0;
  for (char c : token) {
    if (c < '0' || c > '9') throw ValidationError("unknown max_features '" + std::string(token) + "'");
    count = count * 10 + (c - '0');
  }
  if (token.empty() || count <= 0) throw ValidationError("max_features must be positive");
  return {Rule::Count, count};
}

std::vector<std::size_t> bootstrap_rows(std::size_t n, Rng& rng) {
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = rng.index(n);
  std::sort(rows.begin(), rows.end());
  return rows;
}

Eigen::VectorXd RandomForest::predict(const Eigen::MatrixXd& X) const {
  if (trees.empty()) throw ValidationError("forest has no trees");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(X.rows());
  for (const auto& t : trees) sum += t.predict(X);
  return sum / static_cast<double>(trees.size());
}

RandomForest fit_forest(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ForestConfig& config) {
  check_xy(X, y);
  if (config.n_estimators <= 0) throw ValidationError("n_estimators must be positive");
  const auto n = static_cast<std::size_t>(X.rows());
  RandomForest forest;
  forest.config = config;
  forest.n_train = static_cast<int>(n);
  forest.trees.resize(static_cast<std::size_t>(config.n_estimators));
  forest.in_bag_unique.assign(forest.trees.size(), 0);
  const int max_features = config.max_features.resolve(static_cast<int>(X.cols()));
  parallel_for(forest.trees.size(), [&](std::size_t i) {
    Rng rng(derive_seed(config.seed, i));
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
      rows = bootstrap_rows(n, rng);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    std::vector<std::size_t> uniq = rows;
    forest.in_bag_unique[i] = static_cast<int>(std::unique(uniq.begin(), uniq.end()) - uniq.begin());
    forest.trees[i] = fit_tree_rows(X, y, rows, config.limits, {max_features, &rng});
  });
  return forest;
}

Eigen::VectorXd feature_importance(const RandomForest& forest) {
  const int p = forest.trees.empty() ? 0 : forest.trees.front().n_features;
  Eigen::VectorXd total = Eigen::VectorXd::Zero(p);
  for (const auto& tree : forest.trees) {
    Eigen::VectorXd per = Eigen::VectorXd::Zero(p);
    for (const auto& node : tree.nodes)
      if (!node.is_leaf()) per(node.feature) += node.impurity_decrease;
    const double s = per.sum();
    if (s > 0.0) total += per / s;
  }
  const double s = total.sum();
  if (s > 0.0) total /= s;
  return total;
}

Eigen::VectorXd GradientBoostedTrees::predict(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd f = Eigen::VectorXd::Constant(X.rows(), init);
  for (const auto& stage : stages) f += learning_rate * stage.predict(X);
  return f;
}

GradientBoostedTrees fit_gbm(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GbmConfig& config) {
  check_xy(X, y);
  if (!(config.learning_rate > 0.0)) throw ValidationError("gbm learning rate must be positive");
  if (config.n_rounds < 0) throw ValidationError("gbm rounds must be non-negative");
  GradientBoostedTrees gbm;
  gbm.learning_rate = config.learning_rate;
  gbm.init = y.mean();
  Eigen::VectorXd f = Eigen::VectorXd::Constant(y.size(), gbm.init);
  gbm.stages.reserve(static_cast<std::size_t>(config.n_rounds));
  for (int m = 0; m < config.n_rounds; ++m) {
    const Eigen::VectorXd residual = y - f;
    gbm.stages.push_back(fit_tree(X, residual, config.limits));
    f += config.learning_rate * gbm.stages.back().predict(X);
  }
  return gbm;
}

}  // namespace corrml
