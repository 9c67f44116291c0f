#include "corrml/inverse.hpp"

#include <algorithm>

#include "corrml/errors.hpp"
#include "corrml/io.hpp"
#include "corrml/preprocess.hpp"

namespace corrml {

std::string_view to_string(InverseFeatureSet set) {
  switch (set) {
    case InverseFeatureSet::Base: return "base";
    case InverseFeatureSet::BaseDur: return "base+dur";
    case InverseFeatureSet::BaseDurTemp: return "base+dur+temp";
  }
  return "base";
}

InverseFeatureSet parse_inverse_feature_set(std::string_view token) {
  for (auto s : kInverseFeatureSets)
    if (to_string(s) == token) return s;
  throw ValidationError("unknown inverse feature set '" + std::string(token) + "'");
}

std::vector<std::string> inverse_columns(InverseFeatureSet set) {
  std::vector<std::string> cols = {"rate_mpy", "env_id", "Al", "Si", "Mg"};
  if (set != InverseFeatureSet::Base) cols.push_back("duration_days");
  if (set == InverseFeatureSet::BaseDurTemp) cols.push_back("temp_c");
  return cols;
}

std::vector<std::string> default_inverse_targets() { return {"Zn", "Ti", "Ni", "Cu", "Fe", "Mn"}; }

bool InverseQuery::serves(InverseFeatureSet set) const {
  switch (set) {
    case InverseFeatureSet::Base: return true;
    case InverseFeatureSet::BaseDur: return duration_days.has_value();
    case InverseFeatureSet::BaseDurTemp: return duration_days.has_value() && temperature_c.has_value();
  }
  return false;
}

Eigen::RowVectorXd InverseQuery::features(InverseFeatureSet set) const {
  if (!serves(set)) throw ValidationError("query '" + id + "' lacks features for " + std::string(to_string(set)));
  Eigen::RowVectorXd x(static_cast<Eigen::Index>(inverse_columns(set).size()));
  x(0) = rate_mpy;
  x(1) = environment;
  x(2) = al;
  x(3) = si;
  x(4) = mg;
  if (set != InverseFeatureSet::Base) x(5) = *duration_days;
  if (set == InverseFeatureSet::BaseDurTemp) x(6) = *temperature_c;
  return x;
}

InverseQuery query_from_sample(const CorrosionSample& s) {
  InverseQuery q;
  q.id = s.id;
  q.rate_mpy = s.rate_mpy;
  q.environment = s.environment;
  q.al = s.composition["Al"];
  q.si = s.composition["Si"];
  q.mg = s.composition["Mg"];
  q.duration_days = s.duration_days;
  q.temperature_c = s.temperature_c;
  return q;
}

std::pair<double, double> pair_weights(double r2_forest, double r2_gbm) {
  const double a = std::max(r2_forest, 0.0), b = std::max(r2_gbm, 0.0);
  if (!(a + b > 0.0)) return {0.5, 0.5};
  return {a / (a + b), b / (a + b)};
}

Eigen::RowVectorXd InverseSubmodel::predict_pair(const Eigen::RowVectorXd& x, Eigen::RowVectorXd* forest_out,
                                                 Eigen::RowVectorXd* gbm_out) const {
  const Eigen::MatrixXd X = x;
  const Eigen::RowVectorXd f = forest.predict(X).row(0);
  const Eigen::RowVectorXd g = gbm.predict(X).row(0);
  if (forest_out) *forest_out = f;
  if (gbm_out) *gbm_out = g;
  return weight_forest * f + weight_gbm * g;
}

namespace {

struct Subset {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  std::vector<std::string> ids;
};

Subset build_subset(const Dataset& d, InverseFeatureSet set, const std::vector<std::size_t>& target_idx) {
  Subset s;
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<Eigen::RowVectorXd> targets;
  for (const auto& sample : d.samples) {
    const auto q = query_from_sample(sample);
    if (!q.serves(set)) continue;
    rows.push_back(q.features(set));
    Eigen::RowVectorXd t(static_cast<Eigen::Index>(target_idx.size()));
    for (std::size_t k = 0; k < target_idx.size(); ++k)
      t(static_cast<Eigen::Index>(k)) = sample.composition.percent[target_idx[k]];
    targets.push_back(std::move(t));
    s.ids.push_back(sample.id);
  }
  const auto p = static_cast<Eigen::Index>(inverse_columns(set).size());
  s.X.resize(static_cast<Eigen::Index>(rows.size()), p);
  s.Y.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(target_idx.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    s.X.row(static_cast<Eigen::Index>(i)) = rows[i];
    s.Y.row(static_cast<Eigen::Index>(i)) = targets[i];
  }
  return s;
}

// Uniform average of per-target R2 over targets where it is defined.
std::optional<double> mean_r2(const Eigen::MatrixXd& Y, const Eigen::MatrixXd& P) {
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index t = 0; t < Y.cols(); ++t) {
    const auto m = compute_metrics(Y.col(t), P.col(t));
    if (m.r2) {
      sum += *m.r2;
      ++count;
    }
  }
  if (!count) return std::nullopt;
  return sum / count;
}

struct PairFit {
  MultiOutputModel<RandomForest> forest;
  MultiOutputModel<GradientBoostedTrees> gbm;
};

PairFit fit_pair(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, const InverseConfig& cfg,
                 std::uint64_t seed) {
  PairFit out;
  std::size_t t = 0;
  out.forest = fit_multi_output(
      [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
        ForestConfig fc = cfg.forest;
        fc.seed = derive_seed(seed, 100 + t++);
        return fit_forest(x, y, fc);
      },
      X, Y, cfg.targets);
  t = 0;
  out.gbm = fit_multi_output(
      [&](const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
        GbmConfig gc = cfg.gbm;
        gc.seed = derive_seed(seed, 200 + t++);
        return fit_gbm(x, y, gc);
      },
      X, Y, cfg.targets);
  return out;
}

}  // namespace

InverseEnsemble fit_inverse(const Dataset& dataset, std::uint64_t seed, const InverseConfig& config) {
  if (config.targets.empty()) throw ValidationError("inverse model needs at least one target element");
  std::vector<std::size_t> target_idx;
  for (const auto& t : config.targets) {
    auto idx = element_index(t);
    if (!idx) throw ValidationError("unknown inverse target element '" + t + "'");
    target_idx.push_back(*idx);
  }
  InverseEnsemble ens;
  ens.targets = config.targets;
  ens.environment_names = dataset.environment_names;

  for (auto set : kInverseFeatureSets) {
    auto& sub = ens.submodels[static_cast<std::size_t>(set)];
    sub.set = set;
    const Subset data = build_subset(dataset, set, target_idx);
    sub.rows = static_cast<std::size_t>(data.X.rows());
    if (sub.rows < config.min_rows) {
      if (set == InverseFeatureSet::Base)
        throw ValidationError("inverse base subset has " + std::to_string(sub.rows) + " rows; need at least " +
                              std::to_string(config.min_rows));
      sub.absent_reason = sub.rows == 0 ? "no rows with the required features"
                                        : "only " + std::to_string(sub.rows) + " rows with the required features";
      continue;
    }
    bool any_varying = false;
    for (Eigen::Index t = 0; t < data.Y.cols(); ++t)
      any_varying |= (data.Y.col(t).array() != data.Y(0, t)).any();
    if (!any_varying)
      throw ValidationError("inverse targets are constant on the " + std::string(to_string(set)) + " subset");

    const std::uint64_t sub_seed = derive_seed(seed, static_cast<std::uint64_t>(set));
    const auto split = split_train_test(sub.rows, sub_seed, config.validation_fraction);
    const Eigen::MatrixXd Xtr = select_rows(data.X, split.train), Xva = select_rows(data.X, split.test);
    const Eigen::MatrixXd Ytr = select_rows(data.Y, split.train), Yva = select_rows(data.Y, split.test);
    const PairFit probe = fit_pair(Xtr, Ytr, config, sub_seed);
    sub.validation_r2_forest = mean_r2(Yva, probe.forest.predict(Xva)).value_or(0.0);
    sub.validation_r2_gbm = mean_r2(Yva, probe.gbm.predict(Xva)).value_or(0.0);
    std::tie(sub.weight_forest, sub.weight_gbm) = pair_weights(sub.validation_r2_forest, sub.validation_r2_gbm);

    PairFit full = fit_pair(data.X, data.Y, config, sub_seed);
    sub.forest = std::move(full.forest);
    sub.gbm = std::move(full.gbm);
    sub.sample_ids = data.ids;
    sub.present = true;
  }
  return ens;
}

std::string InversePrediction::provenance() const {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += ";";
    out += to_string(p.set);
  }
  return out;
}

std::vector<InversePrediction> predict_inverse(const InverseEnsemble& ensemble,
                                               const std::vector<InverseQuery>& queries) {
  std::vector<InversePrediction> out;
  out.reserve(queries.size());
  const auto t = static_cast<Eigen::Index>(ensemble.targets.size());
  for (const auto& q : queries) {
    if (!std::isfinite(q.rate_mpy) || q.rate_mpy < 0.0)
      throw ValidationError("query '" + q.id + "' has an invalid corrosion rate");
    if (q.environment < 0 || q.environment >= static_cast<int>(ensemble.environment_names.size()))
      throw ValidationError("query '" + q.id + "' has an invalid environment id");
    InversePrediction p;
    p.id = q.id;
    p.union_raw = Eigen::RowVectorXd::Zero(t);
    for (const auto& sub : ensemble.submodels) {
      if (!sub.present || !q.serves(sub.set)) continue;
      SubmodelOutput part;
      part.set = sub.set;
      part.pair = sub.predict_pair(q.features(sub.set), &part.forest, &part.gbm);
      p.union_raw += part.pair;
      p.parts.push_back(std::move(part));
    }
    if (p.parts.empty()) throw ValidationError("no submodel can serve query '" + q.id + "'");
    p.union_raw /= static_cast<double>(p.parts.size());
    p.values = p.union_raw.cwiseMax(0.0).cwiseMin(100.0);
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

InverseScores score(std::string name, const Eigen::MatrixXd& truth, const Eigen::MatrixXd& pred) {
  InverseScores s;
  s.submodel_set = std::move(name);
  s.rows = static_cast<std::size_t>(truth.rows());
  double r2_sum = 0.0, rmse_sum = 0.0;
  int r2_count = 0;
  for (Eigen::Index t = 0; t < truth.cols(); ++t) {
    auto m = compute_metrics(truth.col(t), pred.col(t));
    if (m.r2) {
      r2_sum += *m.r2;
      ++r2_count;
    }
    rmse_sum += m.rmse;
    s.per_element.push_back(m);
  }
  s.mean_r2 = r2_count ? r2_sum / r2_count : 0.0;
  s.mean_rmse = truth.cols() ? rmse_sum / static_cast<double>(truth.cols()) : 0.0;
  return s;
}

}  // namespace

InverseEvaluation evaluate_inverse(const InverseEnsemble& ensemble, const Dataset& held_out) {
  if (held_out.empty()) throw ValidationError("evaluate_inverse: no held-out rows");
  std::vector<std::size_t> target_idx;
  for (const auto& t : ensemble.targets) target_idx.push_back(*element_index(t));
  const auto T = static_cast<Eigen::Index>(target_idx.size());

  std::vector<InverseQuery> queries;
  Eigen::MatrixXd truth(static_cast<Eigen::Index>(held_out.size()), T);
  for (std::size_t i = 0; i < held_out.size(); ++i) {
    const auto& s = held_out.samples[i];
    queries.push_back(query_from_sample(s));
    for (Eigen::Index t = 0; t < T; ++t)
      truth(static_cast<Eigen::Index>(i), t) = s.composition.percent[target_idx[static_cast<std::size_t>(t)]];
  }
  const auto preds = predict_inverse(ensemble, queries);

  InverseEvaluation ev;
  ev.targets = ensemble.targets;
  Eigen::MatrixXd pred_union(truth.rows(), T);
  for (std::size_t i = 0; i < preds.size(); ++i) pred_union.row(static_cast<Eigen::Index>(i)) = preds[i].values;
  ev.union_scores = score("union", truth, pred_union);

  for (const auto& sub : ensemble.submodels) {
    if (!sub.present) continue;
    std::vector<Eigen::RowVectorXd> t_rows, p_rows;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      for (const auto& part : preds[i].parts) {
        if (part.set != sub.set) continue;
        t_rows.push_back(truth.row(static_cast<Eigen::Index>(i)));
        p_rows.push_back(part.pair.cwiseMax(0.0).cwiseMin(100.0));
      }
    }
    if (t_rows.empty()) continue;
    Eigen::MatrixXd tm(static_cast<Eigen::Index>(t_rows.size()), T), pm(static_cast<Eigen::Index>(t_rows.size()), T);
    for (std::size_t r = 0; r < t_rows.size(); ++r) {
      tm.row(static_cast<Eigen::Index>(r)) = t_rows[r];
      pm.row(static_cast<Eigen::Index>(r)) = p_rows[r];
    }
    ev.submodel_scores.push_back(score(std::string(to_string(sub.set)), tm, pm));
  }
  return ev;
}

std::string inverse_scores_csv(const InverseEvaluation& ev) {
  io::CsvTable t;
  t.header = {"element", "r2", "rmse", "submodel_set"};
  auto emit = [&](const InverseScores& s) {
    for (std::size_t k = 0; k < ev.targets.size(); ++k) {
      const auto& m = s.per_element[k];
      t.rows.push_back({ev.targets[k], m.r2 ? io::format_double(*m.r2) : "NA", io::format_double(m.rmse),
                        s.submodel_set});
    }
  };
  emit(ev.union_scores);
  for (const auto& s : ev.submodel_scores) emit(s);
  return t.to_string();
}

std::string feature_set_comparison_csv(const InverseEvaluation& ev) {
  io::CsvTable t;
  t.header = {"feature_set", "rows", "r2", "rmse"};
  for (const auto& s : ev.submodel_scores)
    t.rows.push_back({s.submodel_set, std::to_string(s.rows), io::format_double(s.mean_r2),
                      io::format_double(s.mean_rmse)});
  t.rows.push_back({"union", std::to_string(ev.union_scores.rows), io::format_double(ev.union_scores.mean_r2),
                    io::format_double(ev.union_scores.mean_rmse)});
  return t.to_string();
}

std::string inverse_predictions_csv(const InverseEnsemble& ensemble, const std::vector<InversePrediction>& preds) {
  io::CsvTable t;
  t.header = {"query_id", "element", "predicted_at_pct", "contributing_submodels"};
  for (const auto& p : preds)
    for (std::size_t k = 0; k < ensemble.targets.size(); ++k)
      t.rows.push_back({p.id, ensemble.targets[k], io::format_double(p.values(static_cast<Eigen::Index>(k))),
                        p.provenance()});
  return t.to_string();
}

}  // namespace corrml
