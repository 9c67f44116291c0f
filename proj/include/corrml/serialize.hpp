#pragma once

// JSON model files. Doubles are written in shortest round-trip form, so a
// save/load cycle reproduces every parameter bit for bit.

#include <json.hpp>
#include <string>

#include "corrml/forward.hpp"
#include "corrml/gpr.hpp"
#include "corrml/inverse.hpp"
#include "corrml/kernels.hpp"
#include "corrml/neural.hpp"
#include "corrml/preprocess.hpp"
#include "corrml/trees.hpp"

namespace corrml::serial {

using json = nlohmann::ordered_json;

json to_json(const KernelSpec<double>& spec);
KernelSpec<double> kernel_from_json(const json& j);

// Stores the training data and a checksum of it; the Cholesky factor and
// alpha are recomputed on load.
json to_json(const GprModel<double>& model);
GprModel<double> gpr_from_json(const json& j);

json to_json(const LogGprModel<double>& model);
LogGprModel<double> log_gpr_from_json(const json& j);

json to_json(const DenseNetwork<double>& net);
DenseNetwork<double> network_from_json(const json& j);

json to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const json& j);

json to_json(const RandomForest& forest);
RandomForest forest_from_json(const json& j);

json to_json(const GradientBoostedTrees& gbm);
GradientBoostedTrees gbm_from_json(const json& j);

json to_json(const ScalerState& scaler);
ScalerState scaler_from_json(const json& j);

json to_json(const ForwardModel& model);
ForwardModel forward_model_from_json(const json& j);

json to_json(const InverseEnsemble& ensemble);
InverseEnsemble inverse_from_json(const json& j);

// FNV-1a over the shortest decimal form of every entry.
std::string data_checksum(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

std::string dump(const json& j);
json parse(const std::string& text);

}  // namespace corrml::serial
