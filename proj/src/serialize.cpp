#include "corrml/serialize.hpp"

#include "corrml/errors.hpp"
#include "corrml/io.hpp"

namespace corrml::serial {

namespace {

constexpr int kFormatVersion = 1;

template <class F>
auto guarded(const char* what, F&& body) {
  try {
    return body();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed ") + what + ": " + e.what());
  }
}

void check_kind(const json& j, std::string_view kind) {
  if (j.at("kind").get<std::string>() != kind)
    throw ValidationError("expected a '" + std::string(kind) + "' document, found '" +
                          j.at("kind").get<std::string>() + "'");
}

json vec(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

// Row-major nested arrays.
json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec(m.row(r).transpose()));
  return rows;
}

Eigen::MatrixXd mat_from(const json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = n ? static_cast<Eigen::Index>(rows[0].size()) : cols_if_empty;
  Eigen::MatrixXd m(n, c);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != c)
      throw ValidationError("ragged matrix in model file");
    for (Eigen::Index k = 0; k < c; ++k) m(r, k) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
  }
  return m;
}

json leaf_json(const LeafKernel<double>& leaf) {
  json j;
  if (leaf.kind == KernelKind::Rbf) {
    j["variant"] = "rbf";
  } else {
    j["variant"] = "matern";
    j["nu"] = matern_nu(leaf.kind);
  }
  j["lengthscales"] = vec(leaf.lengthscales);
  j["variance"] = leaf.variance;
  return j;
}

LeafKernel<double> leaf_from(const json& j) {
  LeafKernel<double> leaf;
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "rbf") leaf.kind = KernelKind::Rbf;
  else if (variant == "matern") leaf.kind = matern_kind(j.at("nu").get<double>());
  else throw ValidationError("unknown kernel variant '" + variant + "'");
  leaf.lengthscales = vec_from(j.at("lengthscales"));
  leaf.variance = j.at("variance").get<double>();
  return leaf;
}

json tree_nodes(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value, n.impurity_decrease, n.samples}));
  return nodes;
}

json limits_json(const TreeLimits& l) { return {{"max_depth", l.max_depth}, {"min_samples_leaf", l.min_samples_leaf}}; }

TreeLimits limits_from(const json& j) {
  return {j.at("max_depth").get<int>(), j.at("min_samples_leaf").get<int>()};
}

template <class Model, class ToJson>
json multi_json(const MultiOutputModel<Model>& m, ToJson to) {
  json models = json::array();
  for (const auto& x : m.models) models.push_back(to(x));
  return {{"targets", m.targets}, {"models", models}};
}

template <class Model, class FromJson>
MultiOutputModel<Model> multi_from(const json& j, FromJson from) {
  MultiOutputModel<Model> m;
  m.targets = j.at("targets").get<std::vector<std::string>>();
  for (const auto& x : j.at("models")) m.models.push_back(from(x));
  if (m.models.size() != m.targets.size()) throw ValidationError("multi-output target count mismatch");
  return m;
}

}  // namespace

std::string data_checksum(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](double v) {
    const auto s = io::format_double(v) + ",";
    h = io::fnv1a(s.data(), s.size(), h);
  };
  for (Eigen::Index r = 0; r < X.rows(); ++r)
    for (Eigen::Index c = 0; c < X.cols(); ++c) feed(X(r, c));
  for (Eigen::Index i = 0; i < y.size(); ++i) feed(y(i));
  return io::hex64(h);
}

json to_json(const KernelSpec<double>& spec) {
  if (spec.leaves().size() == 1) return leaf_json(spec.leaves().front());
  json terms = json::array();
  for (const auto& leaf : spec.leaves()) terms.push_back(leaf_json(leaf));
  return {{"variant", "sum"}, {"terms", terms}};
}

KernelSpec<double> kernel_from_json(const json& j) {
  return guarded("kernel", [&] {
    KernelSpec<double> spec;
    if (j.at("variant").get<std::string>() == "sum") {
      for (const auto& t : j.at("terms")) spec.leaves().push_back(leaf_from(t));
    } else {
      spec.leaves().push_back(leaf_from(j));
    }
    spec.validate();
    return spec;
  });
}

json to_json(const GprModel<double>& m) {
  json j;
  j["kind"] = "gpr";
  j["version"] = kFormatVersion;
  j["kernel"] = to_json(m.spec);
  j["mean"] = m.mean;
  j["noise"] = m.noise;
  j["jitter"] = m.jitter;
  j["checksum"] = data_checksum(m.X, m.y);
  j["X"] = mat(m.X);
  j["y"] = vec(m.y);
  return j;
}

GprModel<double> gpr_from_json(const json& j) {
  return guarded("gpr model", [&] {
    check_kind(j, "gpr");
    const auto spec = kernel_from_json(j.at("kernel"));
    const Eigen::MatrixXd X = mat_from(j.at("X"), spec.dim());
    const Eigen::VectorXd y = vec_from(j.at("y"));
    if (data_checksum(X, y) != j.at("checksum").get<std::string>())
      throw ValidationError("gpr model training-data checksum mismatch");
    const double jitter = j.at("jitter").get<double>();
    const double noise = j.at("noise").get<double>();
    if (!(noise > 0.0) || !(jitter >= 0.0)) throw ValidationError("gpr model has invalid noise or jitter");
    GprModel<double> m;
    m.X = X;
    m.y = y;
    m.spec = spec;
    m.noise = noise;
    m.jitter = jitter;
    m.mean = j.at("mean").get<double>();
    Eigen::MatrixXd K = gram(X, spec);
    K.diagonal().array() += noise;
    K.diagonal().array() += jitter;
    m.llt.compute(K);
    if (m.llt.info() != Eigen::Success) throw NumericalError("stored gpr model no longer factorizes");
    m.alpha = m.llt.solve((y.array() - m.mean).matrix());
    return m;
  });
}

json to_json(const LogGprModel<double>& m) {
  json j;
  j["kind"] = "loggpr";
  j["version"] = kFormatVersion;
  j["eps"] = m.eps;
  j["back_transform"] = std::string(to_string(m.back_transform));
  j["inner"] = to_json(m.inner);
  return j;
}

LogGprModel<double> log_gpr_from_json(const json& j) {
  return guarded("log-gpr model", [&] {
    check_kind(j, "loggpr");
    LogGprModel<double> m;
    m.eps = j.at("eps").get<double>();
    m.back_transform = parse_back_transform(j.at("back_transform").get<std::string>());
    m.inner = gpr_from_json(j.at("inner"));
    return m;
  });
}

json to_json(const DenseNetwork<double>& net) {
  json layers = json::array();
  for (const auto& l : net.layers)
    layers.push_back({{"fan_in", l.weights.rows()},
                      {"fan_out", l.weights.cols()},
                      {"activation", l.activation == Activation::Relu ? "relu" : "identity"},
                      {"weights", mat(l.weights)},
                      {"bias", vec(l.bias)}});
  return {{"kind", "dnn"}, {"version", kFormatVersion}, {"layers", layers}};
}

DenseNetwork<double> network_from_json(const json& j) {
  return guarded("network", [&] {
    check_kind(j, "dnn");
    DenseNetwork<double> net;
    for (const auto& lj : j.at("layers")) {
      DenseLayer<double> l;
      const auto act = lj.at("activation").get<std::string>();
      if (act == "relu") l.activation = Activation::Relu;
      else if (act == "identity") l.activation = Activation::Identity;
      else throw ValidationError("unknown activation '" + act + "'");
      l.weights = mat_from(lj.at("weights"), lj.at("fan_out").get<Eigen::Index>());
      l.bias = vec_from(lj.at("bias"));
      if (l.weights.rows() != lj.at("fan_in").get<Eigen::Index>() ||
          l.weights.cols() != lj.at("fan_out").get<Eigen::Index>())
        throw ValidationError("layer shape does not match its declared fan-in/fan-out");
      net.layers.push_back(std::move(l));
    }
    net.validate();
    return net;
  });
}

json to_json(const DecisionTree& t) {
  return {{"n_features", t.n_features}, {"nodes", tree_nodes(t)}};
}

DecisionTree tree_from_json(const json& j) {
  return guarded("tree", [&] {
    DecisionTree t;
    t.n_features = j.at("n_features").get<int>();
    for (const auto& n : j.at("nodes")) {
      TreeNode node;
      node.feature = n.at(0).get<int>();
      node.threshold = n.at(1).get<double>();
      node.left = n.at(2).get<int>();
      node.right = n.at(3).get<int>();
      node.value = n.at(4).get<double>();
      node.impurity_decrease = n.at(5).get<double>();
      node.samples = n.at(6).get<int>();
      t.nodes.push_back(node);
    }
    const int count = static_cast<int>(t.nodes.size());
    if (count == 0) throw ValidationError("tree has no nodes");
    for (int i = 0; i < count; ++i) {
      const auto& n = t.nodes[static_cast<std::size_t>(i)];
      if (n.is_leaf()) continue;
      if (n.feature >= t.n_features || n.left <= i || n.right <= i || n.left >= count || n.right >= count)
        throw ValidationError("tree node " + std::to_string(i) + " has invalid links");
    }
    return t;
  });
}

json to_json(const RandomForest& f) {
  json trees = json::array();
  for (const auto& t : f.trees) trees.push_back(to_json(t));
  return {{"kind", "forest"},
          {"version", kFormatVersion},
          {"n_estimators", f.config.n_estimators},
          {"limits", limits_json(f.config.limits)},
          {"max_features", f.config.max_features.to_string()},
          {"bootstrap", f.config.bootstrap},
          {"seed", f.config.seed},
          {"n_train", f.n_train},
          {"in_bag_unique", f.in_bag_unique},
          {"trees", trees}};
}

RandomForest forest_from_json(const json& j) {
  return guarded("forest", [&] {
    check_kind(j, "forest");
    RandomForest f;
    f.config.n_estimators = j.at("n_estimators").get<int>();
    f.config.limits = limits_from(j.at("limits"));
    f.config.max_features = MaxFeatures::parse(j.at("max_features").get<std::string>());
    f.config.bootstrap = j.at("bootstrap").get<bool>();
    f.config.seed = j.at("seed").get<std::uint64_t>();
    f.n_train = j.at("n_train").get<int>();
    f.in_bag_unique = j.at("in_bag_unique").get<std::vector<int>>();
    for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
    if (f.trees.empty()) throw ValidationError("forest has no trees");
    return f;
  });
}

json to_json(const GradientBoostedTrees& g) {
  json stages = json::array();
  for (const auto& t : g.stages) stages.push_back(to_json(t));
  return {{"kind", "gbm"}, {"version", kFormatVersion}, {"init", g.init}, {"learning_rate", g.learning_rate},
          {"stages", stages}};
}

GradientBoostedTrees gbm_from_json(const json& j) {
  return guarded("gbm", [&] {
    check_kind(j, "gbm");
    GradientBoostedTrees g;
    g.init = j.at("init").get<double>();
    g.learning_rate = j.at("learning_rate").get<double>();
    for (const auto& t : j.at("stages")) g.stages.push_back(tree_from_json(t));
    return g;
  });
}

json to_json(const ScalerState& s) {
  std::vector<int> constant(s.constant.begin(), s.constant.end());
  return {{"means", vec(s.means)}, {"stds", vec(s.stds)}, {"constant", constant}};
}

ScalerState scaler_from_json(const json& j) {
  return guarded("scaler", [&] {
    ScalerState s;
    s.means = vec_from(j.at("means"));
    s.stds = vec_from(j.at("stds"));
    for (int c : j.at("constant").get<std::vector<int>>()) s.constant.push_back(c != 0);
    if (s.stds.size() != s.means.size() || s.constant.size() != static_cast<std::size_t>(s.means.size()))
      throw ValidationError("scaler vectors differ in length");
    return s;
  });
}

json to_json(const ForwardModel& m) {
  json j;
  j["kind"] = "forward";
  j["version"] = kFormatVersion;
  j["family"] = std::string(to_string(m.family));
  j["feature_set"] = std::string(to_string(m.features));
  j["environment_names"] = m.environment_names;
  j["columns"] = m.columns;
  j["scaler"] = m.scaler ? to_json(*m.scaler) : json(nullptr);
  std::visit(
      [&](const auto& model) {
        using M = std::decay_t<decltype(model)>;
        if constexpr (std::is_same_v<M, DnnForward>) {
          j["model"] = {{"target_mean", model.target_mean},
                        {"target_scale", model.target_scale},
                        {"network", to_json(model.net)}};
        } else {
          j["model"] = to_json(model);
        }
      },
      m.model);
  if (m.cv) {
    json points = json::array();
    for (const auto& p : m.cv->points)
      points.push_back({{"point", p.point}, {"mean_r2", p.mean_r2}, {"mean_rmse", p.mean_rmse}});
    j["cv"] = {{"best", m.cv->best}, {"points", points}};
  }
  return j;
}

ForwardModel forward_model_from_json(const json& j) {
  return guarded("forward model", [&] {
    check_kind(j, "forward");
    ForwardModel m;
    m.family = parse_forward_family(j.at("family").get<std::string>());
    m.features = parse_feature_set(j.at("feature_set").get<std::string>());
    m.environment_names = j.at("environment_names").get<std::vector<std::string>>();
    m.columns = j.at("columns").get<std::vector<std::string>>();
    if (!j.at("scaler").is_null()) m.scaler = scaler_from_json(j.at("scaler"));
    const auto& mj = j.at("model");
    switch (m.family) {
      case ForwardFamily::Rf: m.model = forest_from_json(mj); break;
      case ForwardFamily::Dnn: {
        DnnForward d;
        d.target_mean = mj.at("target_mean").get<double>();
        d.target_scale = mj.at("target_scale").get<double>();
        d.net = network_from_json(mj.at("network"));
        m.model = std::move(d);
        break;
      }
      case ForwardFamily::Gpr: m.model = gpr_from_json(mj); break;
      case ForwardFamily::LogGpr: m.model = log_gpr_from_json(mj); break;
    }
    if (auto it = j.find("cv"); it != j.end()) {
      CvResult cv;
      cv.best = it->at("best").get<std::size_t>();
      for (const auto& p : it->at("points")) {
        GridPointResult r;
        r.point = p.at("point").get<ParamPoint>();
        r.mean_r2 = p.at("mean_r2").get<double>();
        r.mean_rmse = p.at("mean_rmse").get<double>();
        cv.points.push_back(std::move(r));
      }
      m.cv = std::move(cv);
    }
    return m;
  });
}

json to_json(const InverseEnsemble& e) {
  json subs = json::array();
  for (const auto& s : e.submodels) {
    json sj;
    sj["feature_set"] = std::string(to_string(s.set));
    sj["present"] = s.present;
    sj["rows"] = s.rows;
    if (!s.present) {
      sj["absent_reason"] = s.absent_reason;
    } else {
      sj["sample_ids"] = s.sample_ids;
      sj["validation_r2_forest"] = s.validation_r2_forest;
      sj["validation_r2_gbm"] = s.validation_r2_gbm;
      sj["weight_forest"] = s.weight_forest;
      sj["weight_gbm"] = s.weight_gbm;
      sj["forest"] = multi_json(s.forest, [](const RandomForest& f) { return to_json(f); });
      sj["gbm"] = multi_json(s.gbm, [](const GradientBoostedTrees& g) { return to_json(g); });
    }
    subs.push_back(std::move(sj));
  }
  return {{"kind", "inverse"},
          {"version", kFormatVersion},
          {"targets", e.targets},
          {"environment_names", e.environment_names},
          {"submodels", subs}};
}

InverseEnsemble inverse_from_json(const json& j) {
  return guarded("inverse ensemble", [&] {
    check_kind(j, "inverse");
    InverseEnsemble e;
    e.targets = j.at("targets").get<std::vector<std::string>>();
    e.environment_names = j.at("environment_names").get<std::vector<std::string>>();
    const auto& subs = j.at("submodels");
    if (subs.size() != e.submodels.size()) throw ValidationError("inverse ensemble must list three submodels");
    for (std::size_t i = 0; i < subs.size(); ++i) {
      const auto& sj = subs[i];
      auto& s = e.submodels[i];
      s.set = parse_inverse_feature_set(sj.at("feature_set").get<std::string>());
      if (s.set != kInverseFeatureSets[i]) throw ValidationError("inverse submodels are out of order");
      s.present = sj.at("present").get<bool>();
      s.rows = sj.at("rows").get<std::size_t>();
      if (!s.present) {
        s.absent_reason = sj.at("absent_reason").get<std::string>();
        continue;
      }
      s.sample_ids = sj.at("sample_ids").get<std::vector<std::string>>();
      s.validation_r2_forest = sj.at("validation_r2_forest").get<double>();
      s.validation_r2_gbm = sj.at("validation_r2_gbm").get<double>();
      s.weight_forest = sj.at("weight_forest").get<double>();
      s.weight_gbm = sj.at("weight_gbm").get<double>();
      if (s.weight_forest < 0.0 || s.weight_gbm < 0.0 || std::abs(s.weight_forest + s.weight_gbm - 1.0) > 1e-12)
        throw ValidationError("inverse pair weights must be non-negative and sum to 1");
      s.forest = multi_from<RandomForest>(sj.at("forest"), forest_from_json);
      s.gbm = multi_from<GradientBoostedTrees>(sj.at("gbm"), gbm_from_json);
      if (s.forest.targets != e.targets || s.gbm.targets != e.targets)
        throw ValidationError("inverse submodel targets differ from the ensemble's");
    }
    if (!e.submodels[0].present) throw ValidationError("inverse ensemble lacks the base submodel");
    return e;
  });
}

std::string dump(const json& j) { return j.dump(1, '\t') + "\n"; }

json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace corrml::serial
