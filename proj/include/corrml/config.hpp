#pragma once

// Run configuration for the command-line tool. A user file is merged over
// the defaults; unknown keys and type mismatches are rejected. The merged
// document is what gets written as resolved_config.json.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "corrml/dataset.hpp"
#include "corrml/forward.hpp"
#include "corrml/inverse.hpp"
#include "corrml/serialize.hpp"

namespace corrml {

struct RunConfig {
  std::string data_path;
  CsvOptions csv;
  FeatureSet features = FeatureSet::CompEnv;
  ForwardFamily model = ForwardFamily::Gpr;
  std::uint64_t seed = 0;
  ForwardProtocol protocol;
  ForwardSettings forward;
  InverseConfig inverse;
  double inverse_test_fraction = 0.2;
  std::string predict_direction = "forward";
  std::string predict_model;
  std::string predict_input;
  std::string report_input;
  std::size_t synth_n = 331;
  double synth_noise = 0.1;
  std::string out = "out";
};

serial::json default_config_json();

// Recursively overlays `user` onto `base`. Throws ValidationError naming the
// offending key path for unknown keys or mismatched types.
serial::json merge_config(const serial::json& base, const serial::json& user);

serial::json load_config_json(const std::optional<std::filesystem::path>& path);

RunConfig resolve_config(const serial::json& merged);

Basis parse_basis(std::string_view token);

}  // namespace corrml
