#include "corrml/forward.hpp"

#include "corrml/io.hpp"

namespace corrml {

ForwardFamily parse_forward_family(std::string_view token) {
  if (token == "rf") return ForwardFamily::Rf;
  if (token == "dnn") return ForwardFamily::Dnn;
  if (token == "gpr") return ForwardFamily::Gpr;
  if (token == "loggpr") return ForwardFamily::LogGpr;
  throw ValidationError("unknown model family '" + std::string(token) + "'");
}

std::string_view to_string(ForwardFamily family) {
  switch (family) {
    case ForwardFamily::Rf: return "rf";
    case ForwardFamily::Dnn: return "dnn";
    case ForwardFamily::Gpr: return "gpr";
    case ForwardFamily::LogGpr: return "loggpr";
  }
  return "rf";
}

KernelSpec<double> parse_kernel_structure(std::string_view text, Eigen::Index dim) {
  std::optional<KernelSpec<double>> spec;
  while (true) {
    const auto plus = text.find('+');
    const auto token = io::trim(text.substr(0, plus));
    KernelSpec<double> part;
    if (token == "rbf") part = KernelSpec<double>::rbf(dim);
    else if (token == "matern12") part = KernelSpec<double>::matern(0.5, dim);
    else if (token == "matern32") part = KernelSpec<double>::matern(1.5, dim);
    else if (token == "matern52") part = KernelSpec<double>::matern(2.5, dim);
    else throw ValidationError("unknown kernel component '" + std::string(token) + "'");
    spec = spec ? KernelSpec<double>::sum(*spec, part) : part;
    if (plus == std::string_view::npos) break;
    text.remove_prefix(plus + 1);
  }
  return *spec;
}

std::string kernel_structure(const KernelSpec<double>& spec) {
  std::string out;
  for (const auto& leaf : spec.leaves()) {
    if (!out.empty()) out += "+";
    switch (leaf.kind) {
      case KernelKind::Rbf: out += "rbf"; break;
      case KernelKind::Matern12: out += "matern12"; break;
      case KernelKind::Matern32: out += "matern32"; break;
      case KernelKind::Matern52: out += "matern52"; break;
    }
  }
  return out;
}

namespace {

struct ForestFamily {
  const RfSettings* settings;

  RandomForest fit(const ParamPoint& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   std::uint64_t seed) const {
    ForestConfig cfg = settings->forest;
    cfg.seed = seed;
    if (auto it = p.find("n_estimators"); it != p.end()) cfg.n_estimators = static_cast<int>(it->second);
    if (auto it = p.find("max_depth"); it != p.end()) cfg.limits.max_depth = static_cast<int>(it->second);
    if (auto it = p.find("max_features"); it != p.end())
      cfg.max_features = MaxFeatures::parse(settings->grid_max_features.at(static_cast<std::size_t>(it->second)));
    return fit_forest(X, y, cfg);
  }
};

}  // namespace

Eigen::VectorXd ForwardModel::predict(const Eigen::MatrixXd& raw) const {
  if (raw.cols() != static_cast<Eigen::Index>(columns.size()))
    throw ValidationError("forward model expects " + std::to_string(columns.size()) + " feature columns");
  const Eigen::MatrixXd X = scaler ? apply_scaler(*scaler, raw) : raw;
  return std::visit(
      [&](const auto& m) -> Eigen::VectorXd {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, RandomForest>) {
          return m.predict(X);
        } else if constexpr (std::is_same_v<M, DnnForward>) {
          return (forward(m.net, X).array() * m.target_scale + m.target_mean).matrix();
        } else if constexpr (std::is_same_v<M, GprModel<double>>) {
          return predict_gpr(m, X).mean;
        } else {
          return predict_log_gpr(m, X);
        }
      },
      model);
}

ForwardModel train_forward(ForwardFamily family, const FeatureMatrix& train, const Eigen::VectorXd& y,
                           const ForwardSettings& settings, std::uint64_t seed) {
  ForwardModel out;
  out.family = family;
  for (const auto& c : train.columns) out.columns.push_back(c.name);
  const Eigen::MatrixXd& raw = train.values;

  switch (family) {
    case ForwardFamily::Rf: {
      ForestFamily fam{&settings.rf};
      if (settings.rf.grid_search) {
        Grid grid;
        grid.axes.push_back({"n_estimators", settings.rf.grid_n_estimators});
        grid.axes.push_back({"max_depth", settings.rf.grid_max_depth});
        std::vector<double> mf;
        for (std::size_t i = 0; i < settings.rf.grid_max_features.size(); ++i) mf.push_back(static_cast<double>(i));
        grid.axes.push_back({"max_features", mf});
        const auto plan = kfold_plan(static_cast<std::size_t>(raw.rows()),
                                     static_cast<std::size_t>(settings.rf.folds), derive_seed(seed, 7));
        auto result = grid_search(fam, grid, raw, y, plan, seed);
        out.model = std::move(result.best_model);
        out.cv = std::move(result.cv);
      } else {
        out.model = fam.fit({}, raw, y, seed);
      }
      break;
    }
    case ForwardFamily::Dnn: {
      out.scaler = fit_scaler(raw);
      const Eigen::MatrixXd X = apply_scaler(*out.scaler, raw);
      DnnForward m;
      Eigen::VectorXd target = y;
      if (settings.dnn.scale_target) {
        m.target_mean = y.mean();
        const double sd = std::sqrt((y.array() - m.target_mean).square().mean());
        m.target_scale = sd > 0.0 ? sd : 1.0;
        target = ((y.array() - m.target_mean) / m.target_scale).matrix();
      }
      auto cfg = settings.dnn.train;
      cfg.seed = seed;
      m.net = train_dnn(X, target, cfg).net;
      out.model = std::move(m);
      break;
    }
    case ForwardFamily::Gpr: {
      out.scaler = fit_scaler(raw);
      const Eigen::MatrixXd X = apply_scaler(*out.scaler, raw);
      const auto spec = parse_kernel_structure(settings.gpr.kernel, X.cols());
      out.model = fit_gpr(X, y, spec, settings.gpr.fit).model;
      break;
    }
    case ForwardFamily::LogGpr: {
      out.scaler = fit_scaler(raw);
      const Eigen::MatrixXd X = apply_scaler(*out.scaler, raw);
      const auto spec = parse_kernel_structure(settings.loggpr.kernel, X.cols());
      out.model =
          fit_log_gpr(X, y, spec, settings.loggpr.fit, settings.loggpr.eps, settings.loggpr.back_transform).model;
      break;
    }
  }
  return out;
}

ForwardRun run_forward(const Dataset& dataset, ForwardFamily family, FeatureSet features,
                       const ForwardSettings& settings, const ForwardProtocol& protocol) {
  const Dataset capped = cap_target(dataset, protocol.cap_threshold, protocol.cap_mode);
  const FeatureData data = build_features(capped, features);
  const auto split = split_train_test(static_cast<std::size_t>(data.features.rows()), protocol.seed,
                                      protocol.test_fraction);
  FeatureMatrix train;
  train.values = select_rows(data.features.values, split.train);
  train.columns = data.features.columns;
  for (auto r : split.train) train.row_ids.push_back(data.features.row_ids[r]);
  const Eigen::VectorXd y_train = select_rows(data.target, split.train);

  ForwardRun run;
  run.model = train_forward(family, train, y_train, settings, protocol.model_seed);
  run.model.features = features;
  run.model.environment_names = dataset.environment_names;

  auto& cell = run.cell;
  cell.family = family;
  cell.features = features;
  cell.train_rows = split.train.size();
  cell.truth = select_rows(data.target, split.test);
  cell.predicted = run.model.predict(select_rows(data.features.values, split.test));
  for (auto r : split.test) cell.ids.push_back(data.features.row_ids[r]);
  cell.metrics = compute_metrics(cell.truth, cell.predicted);
  return run;
}

ForwardReport compare_forward_models(const Dataset& dataset, const std::vector<ForwardFamily>& families,
                                     const std::vector<FeatureSet>& feature_sets, const ForwardSettings& settings,
                                     const ForwardProtocol& protocol) {
  ForwardReport report;
  for (auto family : families)
    for (auto fs : feature_sets) report.cells.push_back(run_forward(dataset, family, fs, settings, protocol).cell);
  return report;
}

std::string metrics_csv(const std::vector<ForwardCell>& cells) {
  io::CsvTable t;
  t.header = {"model", "feature_set", "r2", "mae", "rmse"};
  for (const auto& c : cells)
    t.rows.push_back({std::string(to_string(c.family)), std::string(to_string(c.features)),
                      c.metrics.r2 ? io::format_double(*c.metrics.r2) : "NA", io::format_double(c.metrics.mae),
                      io::format_double(c.metrics.rmse)});
  return t.to_string();
}

std::string pairs_csv(const ForwardCell& cell) {
  io::CsvTable t;
  t.header = {"sample_id", "true", "predicted"};
  for (Eigen::Index i = 0; i < cell.truth.size(); ++i)
    t.rows.push_back({cell.ids[static_cast<std::size_t>(i)], io::format_double(cell.truth(i)),
                      io::format_double(cell.predicted(i))});
  return t.to_string();
}

std::string pairs_file_name(const ForwardCell& cell) {
  std::string fs(to_string(cell.features));
  for (auto& c : fs)
    if (c == '+') c = '_';
  return "pairs_" + std::string(to_string(cell.family)) + "_" + fs + ".csv";
}

Eigen::MatrixXd forward_query_features(const ForwardModel& model, const Dataset& queries) {
  if (queries.environment_names != model.environment_names)
    throw ValidationError("query environment labels differ from the model's");
  for (const auto& s : queries.samples) {
    if (uses_temperature(model.features) && !s.temperature_c)
      throw ValidationError("query '" + s.id + "' lacks temp_c required by the model");
    if (uses_duration(model.features) && !s.duration_days)
      throw ValidationError("query '" + s.id + "' lacks duration_days required by the model");
  }
  const auto data = build_features(queries, model.features);
  std::vector<std::string> names;
  for (const auto& c : data.features.columns) names.push_back(c.name);
  if (names != model.columns) throw ValidationError("query feature schema does not match the model");
  return data.features.values;
}

}  // namespace corrml
