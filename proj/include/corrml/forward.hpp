#pragma once

// Forward models (composition/environment -> corrosion rate) behind one
// interface, plus the train/test comparison harness across model families
// and feature sets.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "corrml/dataset.hpp"
#include "corrml/evaluation.hpp"
#include "corrml/gpr.hpp"
#include "corrml/neural.hpp"
#include "corrml/preprocess.hpp"
#include "corrml/trees.hpp"

namespace corrml {

enum class ForwardFamily { Rf, Dnn, Gpr, LogGpr };

ForwardFamily parse_forward_family(std::string_view token);
std::string_view to_string(ForwardFamily family);

// Kernel structure as a '+'-joined list of rbf, matern12, matern32, matern52.
KernelSpec<double> parse_kernel_structure(std::string_view text, Eigen::Index dim);
std::string kernel_structure(const KernelSpec<double>& spec);

struct RfSettings {
  ForestConfig forest{200, {-1, 1}, {MaxFeatures::Rule::Third, 0}, true, 0};
  bool grid_search = false;
  std::vector<double> grid_n_estimators{100, 200, 400};
  std::vector<double> grid_max_depth{4, 8, 16, -1};            // -1 = unlimited
  std::vector<std::string> grid_max_features{"all", "sqrt", "third"};
  int folds = 5;
};

struct DnnSettings {
  TrainConfig<double> train{};
  // Standardize the target before training and undo it on prediction.
  bool scale_target = true;
};

struct GprSettings {
  std::string kernel = "matern32";
  GprFitOptions<double> fit{};
};

struct LogGprSettings {
  std::string kernel = "rbf+matern52";
  GprFitOptions<double> fit{};
  double eps = 1e-6;
  BackTransform back_transform = BackTransform::Median;
};

struct ForwardSettings {
  RfSettings rf;
  DnnSettings dnn;
  GprSettings gpr;
  LogGprSettings loggpr;
};

struct DnnForward {
  DenseNetwork<double> net;
  double target_mean = 0.0;
  double target_scale = 1.0;
};

struct ForwardModel {
  ForwardFamily family = ForwardFamily::Rf;
  FeatureSet features = FeatureSet::CompEnv;
  std::vector<std::string> environment_names;
  std::vector<std::string> columns;
  std::optional<ScalerState> scaler;  // DNN and GP families
  std::variant<RandomForest, DnnForward, GprModel<double>, LogGprModel<double>> model;
  std::optional<CvResult> cv;  // when the forest was grid-searched

  // Raw (unscaled) feature rows in `columns` order.
  Eigen::VectorXd predict(const Eigen::MatrixXd& raw) const;
};

// Trains on raw features; scaling (when the family uses it) is fitted here
// on the given rows only.
ForwardModel train_forward(ForwardFamily family, const FeatureMatrix& train, const Eigen::VectorXd& y,
                           const ForwardSettings& settings, std::uint64_t seed);

struct ForwardProtocol {
  double cap_threshold = 100.0;
  CapMode cap_mode = CapMode::Drop;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;        // split
  std::uint64_t model_seed = 0;  // training
};

struct ForwardCell {
  ForwardFamily family;
  FeatureSet features;
  Metrics metrics;
  std::vector<std::string> ids;
  Eigen::VectorXd truth;
  Eigen::VectorXd predicted;
  std::size_t train_rows = 0;
};

struct ForwardRun {
  ForwardModel model;
  ForwardCell cell;
};

// Cap, build features, split, train on the train rows, score the test rows.
ForwardRun run_forward(const Dataset& dataset, ForwardFamily family, FeatureSet features,
                       const ForwardSettings& settings, const ForwardProtocol& protocol);

struct ForwardReport {
  std::vector<ForwardCell> cells;
};

ForwardReport compare_forward_models(const Dataset& dataset, const std::vector<ForwardFamily>& families,
                                     const std::vector<FeatureSet>& feature_sets, const ForwardSettings& settings,
                                     const ForwardProtocol& protocol);

// model,feature_set,r2,mae,rmse
std::string metrics_csv(const std::vector<ForwardCell>& cells);
// sample_id,true,predicted
std::string pairs_csv(const ForwardCell& cell);
std::string pairs_file_name(const ForwardCell& cell);

// Row features for arbitrary samples in the model's column order; throws if a
// sample lacks a field the model needs.
Eigen::MatrixXd forward_query_features(const ForwardModel& model, const Dataset& queries);

}  // namespace corrml
