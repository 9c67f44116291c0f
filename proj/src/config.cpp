#include "corrml/config.hpp"

#include "corrml/errors.hpp"
#include "corrml/io.hpp"

namespace corrml {

using serial::json;

Basis parse_basis(std::string_view token) {
  if (token == "at") return Basis::Atomic;
  if (token == "wt") return Basis::Weight;
  throw ValidationError("unknown composition units '" + std::string(token) + "' (expected wt or at)");
}

json default_config_json() {
  json j;
  j["data"] = {{"path", ""},
               {"units", "at"},
               {"grade_map", {{"A", 1.0}, {"B", 5.0}, {"C", 20.0}, {"D", 50.0}}},
               {"strict", false},
               {"strict_floor", 95.0}};
  j["features"] = "comp+env";
  j["model"] = "gpr";
  j["seed"] = 0;
  j["split"] = {{"seed", 0}, {"test_fraction", 0.2}};
  j["cap"] = {{"threshold", 100.0}, {"mode", "drop"}};
  j["rf"] = {{"n_estimators", 200},
             {"max_depth", -1},
             {"min_samples_leaf", 1},
             {"max_features", "third"},
             {"bootstrap", true},
             {"grid_search", false},
             {"folds", 5},
             {"grid",
              {{"n_estimators", {100, 200, 400}},
               {"max_depth", {4, 8, 16, -1}},
               {"max_features", {"all", "sqrt", "third"}}}}};
  j["dnn"] = {{"hidden", {64, 32, 16, 8}},
              {"learning_rate", 0.001},
              {"epochs", 200},
              {"huber_delta", 0.1},
              {"batch_size", 0},
              {"plateau_stop", false},
              {"scale_target", true}};
  j["gpr"] = {{"kernel", "matern32"}, {"epochs", 200}, {"learning_rate", 0.05}};
  j["loggpr"] = {{"kernel", "rbf+matern52"},
                 {"epochs", 200},
                 {"learning_rate", 0.05},
                 {"eps", 1e-6},
                 {"back_transform", "median"}};
  j["inverse"] = {{"targets", default_inverse_targets()},
                  {"test_fraction", 0.2},
                  {"validation_fraction", 0.2},
                  {"min_rows", 10},
                  {"forest", {{"n_estimators", 100}, {"max_depth", -1}, {"min_samples_leaf", 1}, {"max_features", "all"}}},
                  {"gbm", {{"n_rounds", 100}, {"learning_rate", 0.1}, {"max_depth", 3}, {"min_samples_leaf", 1}}}};
  j["predict"] = {{"direction", "forward"}, {"model", ""}, {"input", ""}};
  j["report"] = {{"input", ""}};
  j["synth"] = {{"n", 331}, {"noise", 0.1}};
  j["out"] = "out";
  return j;
}

namespace {

bool same_shape(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

json merge_at(const json& base, const json& user, const std::string& path) {
  if (!same_shape(base, user))
    throw ValidationError("config key '" + path + "' has type " + user.type_name() + ", expected " +
                          base.type_name());
  if (!base.is_object()) return user;
  json out = base;
  for (const auto& [key, value] : user.items()) {
    const std::string sub = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ValidationError("unknown config key '" + sub + "'");
    out[key] = merge_at(base[key], value, sub);
  }
  return out;
}

TreeLimits limits_of(const json& j) {
  return {j.at("max_depth").get<int>(), j.at("min_samples_leaf").get<int>()};
}

}  // namespace

json merge_config(const json& base, const json& user) { return merge_at(base, user, ""); }

json load_config_json(const std::optional<std::filesystem::path>& path) {
  const json defaults = default_config_json();
  if (!path) return defaults;
  return merge_config(defaults, serial::parse(io::read_file(*path)));
}

RunConfig resolve_config(const json& j) {
  try {
    RunConfig c;
    const auto& d = j.at("data");
    c.data_path = d.at("path").get<std::string>();
    c.csv.units = parse_basis(d.at("units").get<std::string>());
    const auto& g = d.at("grade_map");
    const char grades[] = {'A', 'B', 'C', 'D'};
    for (std::size_t i = 0; i < 4; ++i) c.csv.grade_map.rate_mpy[i] = g.at(std::string(1, grades[i])).get<double>();
    c.csv.grade_map.validate();
    c.csv.strict = d.at("strict").get<bool>();
    c.csv.strict_floor = d.at("strict_floor").get<double>();

    c.features = parse_feature_set(j.at("features").get<std::string>());
    c.model = parse_forward_family(j.at("model").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.protocol.seed = j.at("split").at("seed").get<std::uint64_t>();
    c.protocol.model_seed = c.seed;
    c.protocol.test_fraction = j.at("split").at("test_fraction").get<double>();
    if (!(c.protocol.test_fraction > 0.0 && c.protocol.test_fraction < 1.0))
      throw ValidationError("split.test_fraction must lie in (0, 1)");
    c.protocol.cap_threshold = j.at("cap").at("threshold").get<double>();
    c.protocol.cap_mode = parse_cap_mode(j.at("cap").at("mode").get<std::string>());

    const auto& rf = j.at("rf");
    auto& rs = c.forward.rf;
    rs.forest.n_estimators = rf.at("n_estimators").get<int>();
    rs.forest.limits = limits_of(rf);
    rs.forest.max_features = MaxFeatures::parse(rf.at("max_features").get<std::string>());
    rs.forest.bootstrap = rf.at("bootstrap").get<bool>();
    rs.grid_search = rf.at("grid_search").get<bool>();
    rs.folds = rf.at("folds").get<int>();
    rs.grid_n_estimators = rf.at("grid").at("n_estimators").get<std::vector<double>>();
    rs.grid_max_depth = rf.at("grid").at("max_depth").get<std::vector<double>>();
    rs.grid_max_features = rf.at("grid").at("max_features").get<std::vector<std::string>>();
    for (const auto& mf : rs.grid_max_features) MaxFeatures::parse(mf);
    if (rs.forest.n_estimators < 1) throw ValidationError("rf.n_estimators must be at least 1");
    if (rs.folds < 2) throw ValidationError("rf.folds must be at least 2");

    const auto& dnn = j.at("dnn");
    auto& tc = c.forward.dnn.train;
    tc.hidden = dnn.at("hidden").get<std::vector<int>>();
    tc.learning_rate = dnn.at("learning_rate").get<double>();
    tc.epochs = dnn.at("epochs").get<int>();
    tc.huber_delta = dnn.at("huber_delta").get<double>();
    tc.batch_size = dnn.at("batch_size").get<int>();
    tc.plateau_stop = dnn.at("plateau_stop").get<bool>();
    tc.validate();
    for (int h : tc.hidden)
      if (h < 1) throw ValidationError("dnn.hidden sizes must be positive");
    c.forward.dnn.scale_target = dnn.at("scale_target").get<bool>();

    const auto& gp = j.at("gpr");
    c.forward.gpr.kernel = gp.at("kernel").get<std::string>();
    c.forward.gpr.fit.epochs = gp.at("epochs").get<int>();
    c.forward.gpr.fit.learning_rate = gp.at("learning_rate").get<double>();
    parse_kernel_structure(c.forward.gpr.kernel, 1);

    const auto& lg = j.at("loggpr");
    c.forward.loggpr.kernel = lg.at("kernel").get<std::string>();
    c.forward.loggpr.fit.epochs = lg.at("epochs").get<int>();
    c.forward.loggpr.fit.learning_rate = lg.at("learning_rate").get<double>();
    c.forward.loggpr.eps = lg.at("eps").get<double>();
    c.forward.loggpr.back_transform = parse_back_transform(lg.at("back_transform").get<std::string>());
    parse_kernel_structure(c.forward.loggpr.kernel, 1);
    for (const auto* fit : {&c.forward.gpr.fit, &c.forward.loggpr.fit})
      if (fit->epochs < 0 || !(fit->learning_rate > 0.0))
        throw ValidationError("gpr epochs must be non-negative and learning rate positive");

    const auto& inv = j.at("inverse");
    c.inverse.targets = inv.at("targets").get<std::vector<std::string>>();
    c.inverse_test_fraction = inv.at("test_fraction").get<double>();
    c.inverse.validation_fraction = inv.at("validation_fraction").get<double>();
    c.inverse.min_rows = inv.at("min_rows").get<std::size_t>();
    const auto& f = inv.at("forest");
    c.inverse.forest.n_estimators = f.at("n_estimators").get<int>();
    c.inverse.forest.limits = limits_of(f);
    c.inverse.forest.max_features = MaxFeatures::parse(f.at("max_features").get<std::string>());
    const auto& gb = inv.at("gbm");
    c.inverse.gbm.n_rounds = gb.at("n_rounds").get<int>();
    c.inverse.gbm.learning_rate = gb.at("learning_rate").get<double>();
    c.inverse.gbm.limits = limits_of(gb);
    for (double fr : {c.inverse_test_fraction, c.inverse.validation_fraction})
      if (!(fr > 0.0 && fr < 1.0)) throw ValidationError("inverse fractions must lie in (0, 1)");

    c.predict_direction = j.at("predict").at("direction").get<std::string>();
    if (c.predict_direction != "forward" && c.predict_direction != "inverse")
      throw ValidationError("predict.direction must be forward or inverse");
    c.predict_model = j.at("predict").at("model").get<std::string>();
    c.predict_input = j.at("predict").at("input").get<std::string>();
    c.report_input = j.at("report").at("input").get<std::string>();
    c.synth_n = j.at("synth").at("n").get<std::size_t>();
    c.synth_noise = j.at("synth").at("noise").get<double>();
    c.out = j.at("out").get<std::string>();
    return c;
  } catch (const serial::json::exception& e) {
    throw ValidationError(std::string("invalid config value: ") + e.what());
  }
}

}  // namespace corrml
