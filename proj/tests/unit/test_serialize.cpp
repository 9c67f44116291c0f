#include <gtest/gtest.h>

#include "corrml/dataset.hpp"
#include "corrml/errors.hpp"
#include "corrml/forward.hpp"
#include "corrml/inverse.hpp"
#include "corrml/random.hpp"
#include "corrml/serialize.hpp"

using namespace corrml;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace {

template <class T, class Load>
T round_trip(const T& value, Load load) {
  return load(serial::parse(serial::dump(serial::to_json(value))));
}

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

TEST(Serialize, KernelRoundTrip) {
  Vector ls(2);
  ls << 0.1 / 3.0, 7.0;
  const auto k = KernelSpec<double>::sum(KernelSpec<double>::leaf(KernelKind::Rbf, ls, 1.0 / 7.0),
                                         KernelSpec<double>::matern(2.5, 2, 0.3));
  const auto back = round_trip(k, serial::kernel_from_json);
  EXPECT_EQ(back.log_params(), k.log_params());
  EXPECT_EQ(back.leaves()[1].kind, KernelKind::Matern52);
}

TEST(Serialize, GprPredictionsBitExact) {
  const Matrix X = random_matrix(15, 2, 1);
  const Vector y = X.col(0).array().sin().matrix();
  const auto m = condition_gpr(X, y, KernelSpec<double>::matern(1.5, 2, 0.8, 1.3), 0.01, 0.2);
  const auto back = round_trip(m, serial::gpr_from_json);
  const Matrix Xs = random_matrix(5, 2, 2);
  EXPECT_EQ(predict_gpr(back, Xs).mean, predict_gpr(m, Xs).mean);
  EXPECT_EQ(predict_gpr(back, Xs).variance, predict_gpr(m, Xs).variance);
}

TEST(Serialize, GprChecksumDetectsTampering) {
  const Matrix X = random_matrix(4, 1, 3);
  const auto m = condition_gpr(X, Vector(X.col(0)), KernelSpec<double>::rbf(1), 0.1, 0.0);
  auto j = serial::to_json(m);
  j["y"][0] = 123.0;
  EXPECT_THROW(serial::gpr_from_json(j), ValidationError);
}

TEST(Serialize, NetworkRoundTrip) {
  const auto net = make_network<double>(3, {4, 2}, 5);
  const auto back = round_trip(net, serial::network_from_json);
  EXPECT_EQ(flatten_parameters(back), flatten_parameters(net));
  const Matrix X = random_matrix(6, 3, 4);
  EXPECT_EQ(forward(back, X), forward(net, X));
}

TEST(Serialize, ForestAndGbmRoundTrip) {
  const Matrix X = random_matrix(60, 3, 6);
  const Vector y = X.col(1) + X.col(2).cwiseAbs2();
  ForestConfig fc;
  fc.n_estimators = 8;
  fc.max_features = MaxFeatures::parse("sqrt");
  const auto f = fit_forest(X, y, fc);
  EXPECT_EQ(round_trip(f, serial::forest_from_json).predict(X), f.predict(X));
  const auto g = fit_gbm(X, y, {15, 0.2, {3, 1}, 0});
  EXPECT_EQ(round_trip(g, serial::gbm_from_json).predict(X), g.predict(X));
}

TEST(Serialize, TreeLinksValidated) {
  const Matrix X = random_matrix(10, 1, 7);
  auto j = serial::to_json(fit_tree(X, Vector(X.col(0))));
  j["nodes"][0][2] = 999;
  EXPECT_THROW(serial::tree_from_json(j), ValidationError);
}

TEST(Serialize, ForwardModelRoundTrip) {
  const Dataset d = generate_synthetic(60, 2, 0.1);
  ForwardSettings s;
  s.loggpr.fit.epochs = 10;
  s.dnn.train.epochs = 10;
  s.dnn.train.hidden = {4};
  ForwardProtocol pr;
  for (auto fam : {ForwardFamily::LogGpr, ForwardFamily::Dnn}) {
    const auto run = run_forward(d, fam, FeatureSet::CompEnv, s, pr);
    const auto back = round_trip(run.model, serial::forward_model_from_json);
    const Matrix F = forward_query_features(run.model, d);
    EXPECT_EQ(back.predict(F), run.model.predict(F));
    EXPECT_EQ(back.columns, run.model.columns);
  }
}

TEST(Serialize, InverseRoundTrip) {
  InverseConfig c;
  c.forest.n_estimators = 5;
  c.gbm.n_rounds = 5;
  const Dataset d = generate_synthetic(80, 5, 0.1);
  const auto ens = fit_inverse(d, 3, c);
  const auto back = round_trip(ens, serial::inverse_from_json);
  std::vector<InverseQuery> qs;
  for (const auto& s : d.samples) qs.push_back(query_from_sample(s));
  const auto a = predict_inverse(ens, qs), b = predict_inverse(back, qs);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
}

TEST(Serialize, ParseErrorsAreValidationErrors) {
  EXPECT_THROW(serial::parse("{not json"), ValidationError);
  EXPECT_THROW(serial::kernel_from_json(serial::parse("{}")), ValidationError);
}
