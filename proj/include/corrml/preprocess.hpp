#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "corrml/dataset.hpp"

namespace corrml {

enum class FeatureSet { Comp, CompEnv, CompEnvTemp, CompEnvDur, CompEnvTempDur };

FeatureSet parse_feature_set(std::string_view token);
std::string_view to_string(FeatureSet set);
bool uses_environment(FeatureSet set);
bool uses_temperature(FeatureSet set);
bool uses_duration(FeatureSet set);

enum class ColumnKind { Composition, EnvironmentIndicator, Temperature, Duration };

struct Column {
  std::string name;
  ColumnKind kind;
};

struct FeatureMatrix {
  Eigen::MatrixXd values;  // rows = samples
  std::vector<Column> columns;
  std::vector<std::string> row_ids;

  Eigen::Index rows() const { return values.rows(); }
  Eigen::Index cols() const { return values.cols(); }
};

struct FeatureData {
  FeatureMatrix features;
  Eigen::VectorXd target;  // mpy
};

std::vector<Column> feature_columns(FeatureSet set, const std::vector<std::string>& environment_names);

// Samples missing a selected optional field are excluded. Throws
// ValidationError when nothing remains.
FeatureData build_features(const Dataset& dataset, FeatureSet set);

// Column-wise standardization with population (1/n) variance. Columns whose
// standard deviation is zero are flagged constant and passed through.
struct ScalerState {
  Eigen::VectorXd means;
  Eigen::VectorXd stds;
  std::vector<bool> constant;

  Eigen::Index size() const { return means.size(); }
};

ScalerState fit_scaler(const Eigen::MatrixXd& values);
Eigen::MatrixXd apply_scaler(const ScalerState& state, const Eigen::MatrixXd& values);
Eigen::MatrixXd invert_scaler(const ScalerState& state, const Eigen::MatrixXd& values);

enum class CapMode { Drop, Clip };

CapMode parse_cap_mode(std::string_view token);
std::string_view to_string(CapMode mode);

// Drop mode removes samples with rate > threshold; clip mode sets them to
// threshold. The boundary is inclusive (rate == threshold is kept as is).
Dataset cap_target(const Dataset& dataset, double threshold = 100.0, CapMode mode = CapMode::Drop);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;
};

// |test| = round(test_fraction * n).
SplitIndices split_train_test(std::size_t n, std::uint64_t seed, double test_fraction = 0.2);

struct FoldPlan {
  std::size_t k = 5;
  std::vector<std::size_t> assignment;  // fold id per row

  std::vector<std::size_t> validation_rows(std::size_t fold) const;
  std::vector<std::size_t> training_rows(std::size_t fold) const;
};

FoldPlan kfold_plan(std::size_t n, std::size_t k = 5, std::uint64_t seed = 0);

// z = ln(y + eps). Throws ValidationError if any y + eps <= 0.
Eigen::VectorXd log_transform(const Eigen::VectorXd& y, double eps = 1e-6);
Eigen::VectorXd inv_log_transform(const Eigen::VectorXd& z, double eps = 1e-6);

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows);
Eigen::VectorXd select_rows(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows);

}  // namespace corrml
