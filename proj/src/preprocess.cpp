#include "corrml/preprocess.hpp"

#include <cmath>
#include <numeric>

#include "corrml/errors.hpp"
#include "corrml/random.hpp"

namespace corrml {

FeatureSet parse_feature_set(std::string_view token) {
  if (token == "comp") return FeatureSet::Comp;
  if (token == "comp+env") return FeatureSet::CompEnv;
  if (token == "comp+env+temp") return FeatureSet::CompEnvTemp;
  if (token == "comp+env+dur") return FeatureSet::CompEnvDur;
  if (token == "comp+env+temp+dur") return FeatureSet::CompEnvTempDur;
  throw ValidationError("unknown feature set '" + std::string(token) + "'");
}

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::Comp: return "comp";
    case FeatureSet::CompEnv: return "comp+env";
    case FeatureSet::CompEnvTemp: return "comp+env+temp";
    case FeatureSet::CompEnvDur: return "comp+env+dur";
    case FeatureSet::CompEnvTempDur: return "comp+env+temp+dur";
  }
  return "comp";
}

bool uses_environment(FeatureSet set) { return set != FeatureSet::Comp; }
bool uses_temperature(FeatureSet set) {
  return set == FeatureSet::CompEnvTemp || set == FeatureSet::CompEnvTempDur;
}
bool uses_duration(FeatureSet set) {
  return set == FeatureSet::CompEnvDur || set == FeatureSet::CompEnvTempDur;
}

std::vector<Column> feature_columns(FeatureSet set, const std::vector<std::string>& environment_names) {
  std::vector<Column> cols;
  for (auto sym : kElementSymbols) cols.push_back({std::string(sym), ColumnKind::Composition});
  if (uses_environment(set))
    for (const auto& name : environment_names)
      cols.push_back({"env=" + name, ColumnKind::EnvironmentIndicator});
  if (uses_temperature(set)) cols.push_back({"temp_c", ColumnKind::Temperature});
  if (uses_duration(set)) cols.push_back({"duration_days", ColumnKind::Duration});
  return cols;
}

FeatureData build_features(const Dataset& dataset, FeatureSet set) {
  const bool env = uses_environment(set), temp = uses_temperature(set), dur = uses_duration(set);
  std::vector<const CorrosionSample*> rows;
  for (const auto& s : dataset.samples) {
    if (temp && !s.temperature_c) continue;
    if (dur && !s.duration_days) continue;
    rows.push_back(&s);
  }
  if (rows.empty())
    throw ValidationError("feature set '" + std::string(to_string(set)) + "' selects no samples");

  FeatureData out;
  out.features.columns = feature_columns(set, dataset.environment_names);
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto p = static_cast<Eigen::Index>(out.features.columns.size());
  out.features.values = Eigen::MatrixXd::Zero(n, p);
  out.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = *rows[static_cast<std::size_t>(i)];
    Eigen::Index c = 0;
    for (double v : s.composition.percent) out.features.values(i, c++) = v;
    if (env) {
      out.features.values(i, c + s.environment) = 1.0;
      c += static_cast<Eigen::Index>(kEnvironmentCount);
    }
    if (temp) out.features.values(i, c++) = *s.temperature_c;
    if (dur) out.features.values(i, c++) = *s.duration_days;
    out.target(i) = s.rate_mpy;
    out.features.row_ids.push_back(s.id);
  }
  return out;
}

ScalerState fit_scaler(const Eigen::MatrixXd& values) {
  if (values.rows() < 2) throw ValidationError("fit_scaler needs at least 2 rows");
  ScalerState s;
  const double n = static_cast<double>(values.rows());
  s.means = values.colwise().mean().transpose();
  s.stds.resize(values.cols());
  s.constant.assign(static_cast<std::size_t>(values.cols()), false);
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    const double var = (values.col(j).array() - s.means(j)).square().sum() / n;
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) {
      s.constant[static_cast<std::size_t>(j)] = true;
      s.stds(j) = 1.0;
    } else {
      s.stds(j) = sd;
    }
  }
  return s;
}

Eigen::MatrixXd apply_scaler(const ScalerState& state, const Eigen::MatrixXd& values) {
  if (values.cols() != state.size()) throw ValidationError("scaler column count mismatch");
  Eigen::MatrixXd out = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    if (state.constant[static_cast<std::size_t>(j)]) continue;
    out.col(j) = (values.col(j).array() - state.means(j)) / state.stds(j);
  }
  return out;
}

Eigen::MatrixXd invert_scaler(const ScalerState& state, const Eigen::MatrixXd& values) {
  if (values.cols() != state.size()) throw ValidationError("scaler column count mismatch");
  Eigen::MatrixXd out = values;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    if (state.constant[static_cast<std::size_t>(j)]) continue;
    out.col(j) = values.col(j).array() * state.stds(j) + state.means(j);
  }
  return out;
}

CapMode parse_cap_mode(std::string_view token) {
  if (token == "drop") return CapMode::Drop;
  if (token == "clip") return CapMode::Clip;
  throw ValidationError("unknown cap mode '" + std::string(token) + "'");
}

std::string_view to_string(CapMode mode) { return mode == CapMode::Drop ? "drop" : "clip"; }

Dataset cap_target(const Dataset& dataset, double threshold, CapMode mode) {
  if (!(threshold > 0.0)) throw ValidationError("cap threshold must be positive");
  Dataset out;
  out.environment_names = dataset.environment_names;
  for (const auto& s : dataset.samples) {
    if (s.rate_mpy <= threshold) {
      out.samples.push_back(s);
    } else if (mode == CapMode::Clip) {
      out.samples.push_back(s);
      out.samples.back().rate_mpy = threshold;
    }
  }
  if (out.empty()) throw ValidationError("cap_target dropped every sample");
  return out;
}

SplitIndices split_train_test(std::size_t n, std::uint64_t seed, double test_fraction) {
  if (n < 2) throw ValidationError("split_train_test needs at least 2 rows");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ValidationError("test fraction must lie in (0, 1)");
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  SplitIndices s;
  s.seed = seed;
  s.test.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
  s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
  std::sort(s.test.begin(), s.test.end());
  std::sort(s.train.begin(), s.train.end());
  return s;
}

std::vector<std::size_t> FoldPlan::validation_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] == fold) rows.push_back(i);
  return rows;
}

std::vector<std::size_t> FoldPlan::training_rows(std::size_t fold) const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    if (assignment[i] != fold) rows.push_back(i);
  return rows;
}

FoldPlan kfold_plan(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || n < k) throw ValidationError("kfold_plan needs 2 <= k <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(n, 0);
  for (std::size_t pos = 0; pos < n; ++pos) plan.assignment[order[pos]] = pos % k;
  return plan;
}

Eigen::VectorXd log_transform(const Eigen::VectorXd& y, double eps) {
  if (!(eps >= 0.0)) throw ValidationError("log shift must be non-negative");
  Eigen::VectorXd z(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double shifted = y(i) + eps;
    if (!(shifted > 0.0) || !std::isfinite(shifted))
      throw ValidationError("log_transform requires y + eps > 0");
    z(i) = std::log(shifted);
  }
  return z;
}

Eigen::VectorXd inv_log_transform(const Eigen::VectorXd& z, double eps) {
  return (z.array().exp() - eps).matrix();
}

Eigen::MatrixXd select_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Eigen::VectorXd select_rows(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    out(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace corrml
