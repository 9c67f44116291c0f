#include <gtest/gtest.h>

#include <cmath>

#include "corrml/dataset.hpp"
#include "corrml/errors.hpp"
#include "corrml/forward.hpp"
#include "corrml/io.hpp"

using namespace corrml;

namespace {

ForwardSettings fast_settings() {
  ForwardSettings s;
  s.rf.forest.n_estimators = 20;
  s.dnn.train.epochs = 30;
  s.dnn.train.hidden = {8, 4};
  s.gpr.fit.epochs = 20;
  s.loggpr.fit.epochs = 20;
  return s;
}

}  // namespace

TEST(KernelStructure, ParseAndPrint) {
  const auto k = parse_kernel_structure("rbf+matern52", 3);
  ASSERT_EQ(k.leaves().size(), 2u);
  EXPECT_EQ(k.leaves()[1].kind, KernelKind::Matern52);
  EXPECT_EQ(kernel_structure(k), "rbf+matern52");
  EXPECT_THROW(parse_kernel_structure("rbf+linear", 3), ValidationError);
  EXPECT_EQ(parse_forward_family("loggpr"), ForwardFamily::LogGpr);
  EXPECT_THROW(parse_forward_family("svm"), ValidationError);
}

TEST(Forward, EveryFamilyRunsAndScores) {
  const Dataset d = generate_synthetic(120, 5, 0.1);
  ForwardProtocol pr;
  pr.seed = 2;
  for (auto fam : {ForwardFamily::Rf, ForwardFamily::Dnn, ForwardFamily::Gpr, ForwardFamily::LogGpr}) {
    const auto run = run_forward(d, fam, FeatureSet::CompEnv, fast_settings(), pr);
    EXPECT_EQ(run.cell.truth.size(), 24);
    EXPECT_EQ(run.cell.train_rows, 96u);
    EXPECT_TRUE(run.cell.predicted.allFinite()) << to_string(fam);
    EXPECT_TRUE(run.cell.metrics.r2.has_value());
  }
}

TEST(Forward, GpFamiliesRecoverSyntheticSignal) {
  const Dataset d = generate_synthetic(200, 6, 0.1);
  ForwardProtocol pr;
  ForwardSettings s;
  s.gpr.fit.epochs = 100;
  s.loggpr.fit.epochs = 100;
  EXPECT_GT(*run_forward(d, ForwardFamily::Gpr, FeatureSet::CompEnv, s, pr).cell.metrics.r2, 0.7);
  EXPECT_GT(*run_forward(d, ForwardFamily::LogGpr, FeatureSet::CompEnv, s, pr).cell.metrics.r2, 0.7);
}

TEST(Forward, QueryFeaturesFollowModelColumns) {
  const Dataset d = generate_synthetic(60, 7, 0.1);
  ForwardProtocol pr;
  const auto run = run_forward(d, ForwardFamily::Rf, FeatureSet::CompEnv, fast_settings(), pr);
  const Eigen::MatrixXd F = forward_query_features(run.model, d);
  EXPECT_EQ(F.cols(), static_cast<Eigen::Index>(run.model.columns.size()));
  EXPECT_EQ(run.model.predict(F).size(), 60);
}

TEST(Forward, CsvOutputs) {
  const Dataset d = generate_synthetic(80, 8, 0.1);
  ForwardProtocol pr;
  const auto report =
      compare_forward_models(d, {ForwardFamily::Rf, ForwardFamily::Gpr}, {FeatureSet::Comp, FeatureSet::CompEnv},
                             fast_settings(), pr);
  ASSERT_EQ(report.cells.size(), 4u);
  const auto t = io::CsvTable::parse(metrics_csv(report.cells));
  EXPECT_EQ(t.header, (std::vector<std::string>{"model", "feature_set", "r2", "mae", "rmse"}));
  EXPECT_EQ(t.rows.size(), 4u);
  const auto& cell = report.cells.front();
  EXPECT_EQ(io::CsvTable::parse(pairs_csv(cell)).rows.size(), static_cast<std::size_t>(cell.truth.size()));
  EXPECT_EQ(pairs_file_name(report.cells[1]), "pairs_" + std::string(to_string(report.cells[1].family)) + "_" +
                                                   (report.cells[1].features == FeatureSet::Comp ? "comp" : "comp_env") +
                                                   ".csv");
}

TEST(Forward, Deterministic) {
  const Dataset d = generate_synthetic(80, 9, 0.1);
  ForwardProtocol pr;
  pr.model_seed = 4;
  const auto a = run_forward(d, ForwardFamily::Dnn, FeatureSet::CompEnv, fast_settings(), pr);
  const auto b = run_forward(d, ForwardFamily::Dnn, FeatureSet::CompEnv, fast_settings(), pr);
  EXPECT_EQ(a.cell.predicted, b.cell.predicted);
}
