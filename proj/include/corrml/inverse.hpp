#pragma once

// Inverse model: corrosion rate + context -> trace-element atomic percents.
//
// Three submodels, one per feature availability pattern (base, base +
// duration, base + duration + temperature). Each is a convex pair of a
// multi-output random forest and a multi-output boosted ensemble whose
// weights come from validation R2. A query is scored by every submodel whose
// features it has; the pair outputs are averaged without weights and the
// result is clamped to [0, 100].

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "corrml/dataset.hpp"
#include "corrml/evaluation.hpp"
#include "corrml/trees.hpp"

namespace corrml {

enum class InverseFeatureSet { Base = 0, BaseDur = 1, BaseDurTemp = 2 };

inline constexpr std::array<InverseFeatureSet, 3> kInverseFeatureSets = {
    InverseFeatureSet::Base, InverseFeatureSet::BaseDur, InverseFeatureSet::BaseDurTemp};

std::string_view to_string(InverseFeatureSet set);
InverseFeatureSet parse_inverse_feature_set(std::string_view token);
std::vector<std::string> inverse_columns(InverseFeatureSet set);

std::vector<std::string> default_inverse_targets();

struct InverseQuery {
  std::string id;
  double rate_mpy = 0.0;
  int environment = 0;  // numeric environment id, not one-hot
  double al = 0.0, si = 0.0, mg = 0.0;
  std::optional<double> duration_days;
  std::optional<double> temperature_c;

  bool serves(InverseFeatureSet set) const;
  Eigen::RowVectorXd features(InverseFeatureSet set) const;
};

InverseQuery query_from_sample(const CorrosionSample& sample);

struct InverseConfig {
  ForestConfig forest{100, {-1, 1}, {MaxFeatures::Rule::All, 0}, true, 0};
  GbmConfig gbm{100, 0.1, {3, 1}, 0};
  double validation_fraction = 0.2;
  std::size_t min_rows = 10;
  std::vector<std::string> targets = default_inverse_targets();
};

// w_i = max(R2_i, 0) normalized; (0.5, 0.5) when both clamp to zero.
std::pair<double, double> pair_weights(double r2_forest, double r2_gbm);

struct InverseSubmodel {
  InverseFeatureSet set = InverseFeatureSet::Base;
  bool present = false;
  std::string absent_reason;
  std::size_t rows = 0;
  std::vector<std::string> sample_ids;
  double validation_r2_forest = 0.0;
  double validation_r2_gbm = 0.0;
  double weight_forest = 0.5;
  double weight_gbm = 0.5;
  MultiOutputModel<RandomForest> forest;
  MultiOutputModel<GradientBoostedTrees> gbm;

  Eigen::RowVectorXd predict_pair(const Eigen::RowVectorXd& x, Eigen::RowVectorXd* forest_out = nullptr,
                                  Eigen::RowVectorXd* gbm_out = nullptr) const;
};

struct InverseEnsemble {
  std::vector<std::string> targets;
  std::vector<std::string> environment_names;
  std::array<InverseSubmodel, 3> submodels;
};

// Throws ValidationError when the base subset is smaller than min_rows or
// every target is constant on a subset. Extension subsets that are too small
// are flagged absent.
InverseEnsemble fit_inverse(const Dataset& dataset, std::uint64_t seed, const InverseConfig& config = {});

struct SubmodelOutput {
  InverseFeatureSet set;
  Eigen::RowVectorXd forest;
  Eigen::RowVectorXd gbm;
  Eigen::RowVectorXd pair;
};

struct InversePrediction {
  std::string id;
  Eigen::RowVectorXd union_raw;  // unclamped mean of pair outputs
  Eigen::RowVectorXd values;     // clamped to [0, 100]
  std::vector<SubmodelOutput> parts;

  std::string provenance() const;  // e.g. "base;base+dur"
};

std::vector<InversePrediction> predict_inverse(const InverseEnsemble& ensemble,
                                               const std::vector<InverseQuery>& queries);

struct InverseScores {
  std::string submodel_set;  // "union" or a feature-set name
  std::size_t rows = 0;
  std::vector<Metrics> per_element;
  double mean_r2 = 0.0;  // over elements with a defined R2
  double mean_rmse = 0.0;
};

struct InverseEvaluation {
  std::vector<std::string> targets;
  InverseScores union_scores;
  std::vector<InverseScores> submodel_scores;  // present submodels, in feature-set order
};

// Scores the union model and each submodel on held-out samples (each
// submodel only on rows it can serve).
InverseEvaluation evaluate_inverse(const InverseEnsemble& ensemble, const Dataset& held_out);

// element,r2,rmse,submodel_set
std::string inverse_scores_csv(const InverseEvaluation& evaluation);
// feature_set,rows,r2,rmse
std::string feature_set_comparison_csv(const InverseEvaluation& evaluation);
// query_id,element,predicted_at_pct,contributing_submodels
std::string inverse_predictions_csv(const InverseEnsemble& ensemble, const std::vector<InversePrediction>& predictions);

}  // namespace corrml
