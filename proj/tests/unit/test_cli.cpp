#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "corrml/io.hpp"

namespace fs = std::filesystem;
using corrml::io::CsvTable;
using corrml::io::read_file;
using corrml::io::write_file;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("corrml_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    write_file(d / "fast.json",
               R"({"gpr": {"epochs": 15}, "loggpr": {"epochs": 15}, "dnn": {"epochs": 20, "hidden": [8]},
                   "rf": {"n_estimators": 15}, "inverse": {"forest": {"n_estimators": 10}, "gbm": {"n_rounds": 10}}})");
    return d;
  }();
  return dir;
}

struct Result {
  int code;
  std::string err;
};

Result run(const std::string& args) {
  const fs::path err = work_dir() / "stderr.txt";
  const std::string cmd = std::string(CORRML_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(err)};
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

const std::string kHeader = "id,env,temp_c,duration_days,rate,rate_unit,grade,Al,Mg,Si\n";

}  // namespace

TEST(Cli, HelpAndUnknownCommand) {
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_NE(run("frobnicate").code, 0);
}

TEST(Cli, BadUnitExitsOneAndNamesRow) {
  write_file(work_dir() / "bad.csv", kHeader + "s1,seawater,,,1,mpy,,95,4,1\ns2,seawater,,,1,ipy,,95,4,1\n");
  const auto r = run("ingest --input " + path("bad.csv") + " --out " + path("bad_out"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("row 2"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("ipy"), std::string::npos) << r.err;
}

TEST(Cli, UnknownConfigKeyExitsOne) {
  write_file(work_dir() / "typo.json", R"({"rff": {}})");
  const auto r = run("synth --config " + path("typo.json") + " --out " + path("typo_out"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("rff"), std::string::npos);
}

TEST(Cli, EndToEnd) {
  const std::string fast = " --config " + path("fast.json");
  ASSERT_EQ(run("synth --n 120 --seed 3 --out " + path("s")).code, 0);
  ASSERT_TRUE(fs::exists(work_dir() / "s" / "synthetic.csv"));
  ASSERT_EQ(run("ingest --input " + path("s/synthetic.csv") + " --out " + path("i")).code, 0);
  EXPECT_TRUE(fs::exists(work_dir() / "i" / "dataset.csv"));
  EXPECT_TRUE(fs::exists(work_dir() / "i" / "summary.txt"));
  EXPECT_TRUE(fs::exists(work_dir() / "i" / "resolved_config.json"));

  ASSERT_EQ(run("train-forward --model loggpr --data " + path("i/dataset.csv") + fast + " --out " + path("f")).code, 0);
  EXPECT_TRUE(fs::exists(work_dir() / "f" / "model.json"));
  EXPECT_TRUE(fs::exists(work_dir() / "f" / "run_metadata.json"));

  write_file(work_dir() / "queries.csv",
             kHeader + "q1,seawater,,,,,,95,4,1\nq2,tap_water,20,30,3,mpy,,96,3,0.5\n");
  ASSERT_EQ(run("predict --direction forward --model " + path("f/model.json") + " --input " + path("queries.csv") +
                " --out " + path("pf"))
                .code,
            0);
  EXPECT_EQ(CsvTable::parse(read_file(work_dir() / "pf" / "predictions.csv")).rows.size(), 2u);

  ASSERT_EQ(run("train-inverse --data " + path("i/dataset.csv") + fast + " --out " + path("inv")).code, 0);
  for (auto f : {"inverse_model.json", "inverse_report.csv", "feature_set_comparison.csv",
                 "inverse_test_predictions.csv"})
    EXPECT_TRUE(fs::exists(work_dir() / "inv" / f)) << f;

  write_file(work_dir() / "inv_q.csv", kHeader + "b1,seawater,,,2,mpy,,95,4,1\n");
  ASSERT_EQ(run("predict --direction inverse --model " + path("inv/inverse_model.json") + " --input " +
                path("inv_q.csv") + " --out " + path("pi"))
                .code,
            0);
  const auto preds = CsvTable::parse(read_file(work_dir() / "pi" / "inverse_predictions.csv"));
  ASSERT_EQ(preds.rows.size(), 6u);
  const auto col = preds.column("contributing_submodels");
  ASSERT_TRUE(col.has_value());
  for (const auto& row : preds.rows) EXPECT_EQ(row[*col], "base");

  ASSERT_EQ(run("compare --data " + path("i/dataset.csv") + fast + " --out " + path("cmp")).code, 0);
  EXPECT_EQ(CsvTable::parse(read_file(work_dir() / "cmp" / "metrics.csv")).rows.size(), 8u);
  ASSERT_EQ(run("report --input " + path("cmp") + " --out " + path("rep")).code, 0);
  for (auto f : {"bars_r2.svg", "bars_mae.svg", "bars_rmse.svg"})
    EXPECT_TRUE(fs::exists(work_dir() / "rep" / f)) << f;
}

TEST(Cli, MissingModelFileExitsOne) {
  EXPECT_EQ(run("predict --model " + path("nope.json") + " --input " + path("nope.csv")).code, 1);
}
