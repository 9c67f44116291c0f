#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corrml/config.hpp"
#include "corrml/dataset.hpp"
#include "corrml/errors.hpp"
#include "corrml/forward.hpp"
#include "corrml/inverse.hpp"
#include "corrml/io.hpp"
#include "corrml/preprocess.hpp"
#include "corrml/serialize.hpp"
#include "corrml/svg.hpp"

namespace fs = std::filesystem;
using namespace corrml;
using serial::json;

namespace {

struct Overrides {
  std::string config;
  std::string data;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::string model;
  std::string features;
  std::string units;
  std::string grade_map;
  bool strict = false;
  bool grid_search = false;
  std::string direction;
  std::string model_file;
  std::string input;
  bool predict_input = false;
  std::optional<std::size_t> n;
  std::optional<double> noise;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory");
}

// "A=1,B=5,C=20,D=50"
json parse_grade_map(const std::string& text) {
  json g = json::object();
  std::string_view rest = text;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const auto item = io::trim(rest.substr(0, comma));
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ValidationError("grade map entry '" + std::string(item) + "' lacks '='");
    const std::string key(io::trim(item.substr(0, eq)));
    const auto value = io::parse_double(io::trim(item.substr(eq + 1)));
    if (!value || (key != "A" && key != "B" && key != "C" && key != "D"))
      throw ValidationError("bad grade map entry '" + std::string(item) + "'");
    g[key] = *value;
    if (comma == std::string_view::npos) break;
    rest.remove_prefix(comma + 1);
  }
  return g;
}

json resolve_json(const Overrides& o) {
  json j = load_config_json(o.config.empty() ? std::nullopt : std::optional<fs::path>(o.config));
  json user = json::object();
  if (!o.data.empty()) user["data"]["path"] = o.data;
  if (!o.units.empty()) user["data"]["units"] = o.units;
  if (!o.grade_map.empty()) user["data"]["grade_map"] = parse_grade_map(o.grade_map);
  if (o.strict) user["data"]["strict"] = true;
  if (!o.out.empty()) user["out"] = o.out;
  if (o.seed) {
    user["seed"] = *o.seed;
    user["split"]["seed"] = *o.seed;
  }
  if (!o.model.empty()) user["model"] = o.model;
  if (!o.features.empty()) user["features"] = o.features;
  if (o.grid_search) user["rf"]["grid_search"] = true;
  if (!o.direction.empty()) user["predict"]["direction"] = o.direction;
  if (!o.model_file.empty()) user["predict"]["model"] = o.model_file;
  if (o.predict_input && !o.input.empty()) user["predict"]["input"] = o.input;
  if (!o.predict_input && !o.input.empty()) user["report"]["input"] = o.input;
  if (o.n) user["synth"]["n"] = *o.n;
  if (o.noise) user["synth"]["noise"] = *o.noise;
  return merge_config(j, user);
}

fs::path prepare_out(const json& resolved, const RunConfig& cfg) {
  const fs::path out = cfg.out;
  fs::create_directories(out);
  io::write_file(out / "resolved_config.json", serial::dump(resolved));
  return out;
}

void print_row_issues(const std::vector<RowIssue>& issues, const char* kind) {
  for (const auto& i : issues) std::cerr << kind << ": row " << i.row << ": " << i.message << "\n";
}

Dataset load_csv(const std::string& path, const CsvOptions& options) {
  auto result = parse_csv_collect(path, options);
  print_row_issues(result.notes, "note");
  if (!result.errors.empty()) {
    print_row_issues(result.errors, "error");
    throw ValidationError(std::to_string(result.errors.size()) + " invalid row(s) in " + path);
  }
  return std::move(result.dataset);
}

Dataset load_dataset(const RunConfig& cfg, const CsvOptions& options) {
  if (cfg.data_path.empty()) throw ValidationError("no dataset given (use --data or data.path)");
  return load_csv(cfg.data_path, options);
}

std::string file_stem_for(const ForwardCell& cell) {
  auto name = pairs_file_name(cell);
  return name.substr(std::string("pairs_").size(), name.size() - std::string("pairs_").size() - 4);
}

void write_cell_outputs(const fs::path& out, const ForwardCell& cell) {
  io::write_file(out / pairs_file_name(cell), pairs_csv(cell));
}

int cmd_ingest(const Overrides& o) {
  const json resolved = resolve_json(o);
  const RunConfig cfg = resolve_config(resolved);
  const Dataset d = load_dataset(cfg, cfg.csv);
  const auto out = prepare_out(resolved, cfg);
  write_csv(d, out / "dataset.csv");
  io::write_file(out / "summary.txt", format_summary(summarize(d), d));
  std::cout << "ingested " << d.size() << " samples into " << (out / "dataset.csv").string() << "\n";
  return 0;
}

json run_metadata(const RunConfig& cfg, const ForwardModel& m, const ForwardCell& cell) {
  json j;
  j["feature_set"] = std::string(to_string(m.features));
  j["columns"] = m.columns;
  j["scaler"] = m.scaler ? serial::to_json(*m.scaler) : json(nullptr);
  j["cap"] = {{"threshold", cfg.protocol.cap_threshold}, {"mode", std::string(to_string(cfg.protocol.cap_mode))}};
  j["split"] = {{"seed", cfg.protocol.seed}, {"test_fraction", cfg.protocol.test_fraction}};
  j["seed"] = cfg.seed;
  j["train_rows"] = cell.train_rows;
  j["test_rows"] = cell.ids.size();
  return j;
}

int cmd_train_forward(const Overrides& o) {
  const json resolved = resolve_json(o);
  const RunConfig cfg = resolve_config(resolved);
  const Dataset d = load_dataset(cfg, cfg.csv);
  ForwardProtocol protocol = cfg.protocol;
  auto run = run_forward(d, cfg.model, cfg.features, cfg.forward, protocol);
  const auto out = prepare_out(resolved, cfg);
  io::write_file(out / "model.json", serial::dump(serial::to_json(run.model)));
  io::write_file(out / "run_metadata.json", serial::dump(run_metadata(cfg, run.model, run.cell)));
  io::write_file(out / "metrics.csv", metrics_csv({run.cell}));
  write_cell_outputs(out, run.cell);
  svg::Scatter plot;
  plot.title = std::string(to_string(cfg.model)) + " / " + std::string(to_string(cfg.features));
  plot.x_label = "true rate (mpy)";
  plot.y_label = "predicted rate (mpy)";
  plot.x = run.cell.truth;
  plot.y = run.cell.predicted;
  io::write_file(out / ("scatter_" + file_stem_for(run.cell) + ".svg"), svg::render_scatter(plot));
  std::cout << metrics_csv({run.cell});
  return 0;
}

int cmd_compare(const Overrides& o) {
  const json resolved = resolve_json(o);
  const RunConfig cfg = resolve_config(resolved);
  const Dataset d = load_dataset(cfg, cfg.csv);
  const auto report =
      compare_forward_models(d, {ForwardFamily::Rf, ForwardFamily::Dnn, ForwardFamily::Gpr, ForwardFamily::LogGpr},
                             {FeatureSet::Comp, FeatureSet::CompEnv}, cfg.forward, cfg.protocol);
  const auto out = prepare_out(resolved, cfg);
  io::write_file(out / "metrics.csv", metrics_csv(report.cells));
  for (const auto& cell : report.cells) write_cell_outputs(out, cell);
  std::cout << metrics_csv(report.cells);
  return 0;
}

Dataset subset(const Dataset& d, const std::vector<std::size_t>& rows) {
  Dataset out;
  out.environment_names = d.environment_names;
  for (auto r : rows) out.samples.push_back(d.samples[r]);
  return out;
}

int cmd_train_inverse(const Overrides& o) {
  const json resolved = resolve_json(o);
  const RunConfig cfg = resolve_config(resolved);
  const Dataset d = load_dataset(cfg, cfg.csv);
  const auto split = split_train_test(d.size(), cfg.protocol.seed, cfg.inverse_test_fraction);
  const Dataset train = subset(d, split.train), test = subset(d, split.test);
  const auto ensemble = fit_inverse(train, cfg.seed, cfg.inverse);
  const auto evaluation = evaluate_inverse(ensemble, test);
  const auto out = prepare_out(resolved, cfg);
  io::write_file(out / "inverse_model.json", serial::dump(serial::to_json(ensemble)));
  io::write_file(out / "inverse_report.csv", inverse_scores_csv(evaluation));
  io::write_file(out / "feature_set_comparison.csv", feature_set_comparison_csv(evaluation));
  std::vector<InverseQuery> queries;
  for (const auto& s : test.samples) queries.push_back(query_from_sample(s));
  io::write_file(out / "inverse_test_predictions.csv",
                 inverse_predictions_csv(ensemble, predict_inverse(ensemble, queries)));
  for (const auto& s : ensemble.submodels)
    if (!s.present) std::cerr << "note: submodel " << to_string(s.set) << " absent: " << s.absent_reason << "\n";
  std::cout << feature_set_comparison_csv(evaluation);
  return 0;
}

int cmd_predict(const Overrides& o) {
  const json resolved = resolve_json(o);
  const RunConfig cfg = resolve_config(resolved);
  if (cfg.predict_model.empty()) throw ValidationError("predict needs --model");
  if (cfg.predict_input.empty()) throw ValidationError("predict needs --input");
  const json model_json = serial::parse(io::read_file(cfg.predict_model));
  CsvOptions options = cfg.csv;
  if (cfg.predict_direction == "forward") {
    const auto model = serial::forward_model_from_json(model_json);
    options.environment_names = model.environment_names;
    options.require_rate = false;
    const Dataset queries = load_csv(cfg.predict_input, options);
    const auto X = forward_query_features(model, queries);
    const Eigen::VectorXd y = model.predict(X);
    io::CsvTable t;
    t.header = {"sample_id", "predicted_rate_mpy"};
    for (std::size_t i = 0; i < queries.size(); ++i)
      t.rows.push_back({queries.samples[i].id, io::format_double(y(static_cast<Eigen::Index>(i)))});
    const auto out = prepare_out(resolved, cfg);
    io::write_file(out / "predictions.csv", t.to_string());
    std::cout << t.to_string();
  } else {
    const auto ensemble = serial::inverse_from_json(model_json);
    options.environment_names = ensemble.environment_names;
    const Dataset queries = load_csv(cfg.predict_input, options);
    std::vector<InverseQuery> q;
    for (const auto& s : queries.samples) q.push_back(query_from_sample(s));
    const auto text = inverse_predictions_csv(ensemble, predict_inverse(ensemble, q));
    const auto out = prepare_out(resolved, cfg);
    io::write_file(out / "inverse_predictions.csv", text);
    std::cout << text;
  }
  return 0;
}

std::optional<io::CsvTable> read_table(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  return io::CsvTable::parse(io::read_file(p));
}

std::size_t need_column(const io::CsvTable& t, std::string_view name, const fs::path& file) {
  auto c = t.column(name);
  if (!c) throw ValidationError(file.string() + " lacks column '" + std::string(name) + "'");
  return *c;
}

std::optional<double> cell_value(const std::string& text) {
  if (text == "NA") return std::nullopt;
  auto v = io::parse_double(text);
  if (!v) throw ValidationError("non-numeric cell '" + text + "' in report input");
  return v;
}

void add_unique(std::vector<std::string>& v, const std::string& s) {
  if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
}

// Grouped bars from a long-format table.
svg::BarChart bars_from(const io::CsvTable& t, const fs::path& file, std::string_view group_col,
                        std::string_view series_col, std::string_view value_col, std::string title) {
  const auto g = need_column(t, group_col, file), s = need_column(t, series_col, file),
             v = need_column(t, value_col, file);
  svg::BarChart c;
  c.title = std::move(title);
  c.y_label = std::string(value_col);
  for (const auto& row : t.rows) {
    add_unique(c.groups, row.at(g));
    add_unique(c.series, row.at(s));
  }
  c.values.assign(c.series.size(), std::vector<std::optional<double>>(c.groups.size()));
  for (const auto& row : t.rows) {
    const auto gi = std::find(c.groups.begin(), c.groups.end(), row.at(g)) - c.groups.begin();
    const auto si = std::find(c.series.begin(), c.series.end(), row.at(s)) - c.series.begin();
    c.values[static_cast<std::size_t>(si)][static_cast<std::size_t>(gi)] = cell_value(row.at(v));
  }
  return c;
}

int cmd_report(const Overrides& o) {
  const json resolved = resolve_json(o);
  const RunConfig cfg = resolve_config(resolved);
  if (cfg.report_input.empty()) throw ValidationError("report needs --input");
  const fs::path in = cfg.report_input;
  if (!fs::is_directory(in)) throw ValidationError("report input '" + in.string() + "' is not a directory");
  const auto out = prepare_out(resolved, cfg);
  int written = 0;
  auto emit = [&](const std::string& name, const std::string& svg_text) {
    io::write_file(out / name, svg_text);
    ++written;
  };

  if (auto t = read_table(in / "metrics.csv")) {
    for (const char* metric : {"r2", "mae", "rmse"})
      emit(std::string("bars_") + metric + ".svg",
           svg::render_bar_chart(bars_from(*t, in / "metrics.csv", "model", "feature_set", metric,
                                           std::string("forward models: ") + metric)));
  }
  std::vector<fs::path> pairs;
  for (const auto& e : fs::directory_iterator(in)) {
    const auto name = e.path().filename().string();
    if (name.rfind("pairs_", 0) == 0 && e.path().extension() == ".csv") pairs.push_back(e.path());
  }
  std::sort(pairs.begin(), pairs.end());
  for (const auto& p : pairs) {
    const auto t = io::CsvTable::parse(io::read_file(p));
    const auto ct = need_column(t, "true", p), cp = need_column(t, "predicted", p);
    svg::Scatter plot;
    plot.title = p.stem().string().substr(6);
    plot.x.resize(static_cast<Eigen::Index>(t.rows.size()));
    plot.y.resize(static_cast<Eigen::Index>(t.rows.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
      plot.x(static_cast<Eigen::Index>(i)) = cell_value(t.rows[i].at(ct)).value();
      plot.y(static_cast<Eigen::Index>(i)) = cell_value(t.rows[i].at(cp)).value();
    }
    emit("scatter_" + plot.title + ".svg", svg::render_scatter(plot));
  }
  if (auto t = read_table(in / "inverse_report.csv")) {
    for (const char* metric : {"r2", "rmse"})
      emit(std::string("inverse_") + metric + ".svg",
           svg::render_bar_chart(bars_from(*t, in / "inverse_report.csv", "element", "submodel_set", metric,
                                           std::string("inverse model per element: ") + metric)));
  }
  if (auto t = read_table(in / "feature_set_comparison.csv")) {
    for (auto& row : t->rows) row.push_back("inverse");
    t->header.push_back("model");
    for (const char* metric : {"r2", "rmse"})
      emit(std::string("feature_sets_") + metric + ".svg",
           svg::render_bar_chart(bars_from(*t, in / "feature_set_comparison.csv", "feature_set", "model", metric,
                                           std::string("inverse feature sets: ") + metric)));
  }
  if (written == 0) throw ValidationError("no report CSVs found in '" + in.string() + "'");
  std::cout << "wrote " << written << " SVG file(s) to " << out.string() << "\n";
  return 0;
}

int cmd_synth(const Overrides& o) {
  const json resolved = resolve_json(o);
  const RunConfig cfg = resolve_config(resolved);
  const Dataset d = generate_synthetic(cfg.synth_n, cfg.seed, cfg.synth_noise);
  const auto out = prepare_out(resolved, cfg);
  write_csv(d, out / "synthetic.csv");
  std::cout << "wrote " << d.size() << " synthetic samples to " << (out / "synthetic.csv").string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corrosion-rate regression toolkit"};
  app.require_subcommand(1);
  Overrides o;

  auto* ingest = app.add_subcommand("ingest", "Validate and normalize a corrosion CSV");
  ingest->add_option("--input", o.data, "Input CSV")->required();
  ingest->add_option("--units", o.units, "Composition basis: wt or at");
  ingest->add_option("--grade-map", o.grade_map, "Grade rates, e.g. A=1,B=5,C=20,D=50");
  ingest->add_flag("--strict", o.strict, "Reject rows whose composition totals less than data.strict_floor");
  add_common(ingest, o);

  auto* train = app.add_subcommand("train-forward", "Train and score one forward model");
  train->add_option("--model", o.model, "rf, dnn, gpr or loggpr");
  train->add_option("--features", o.features, "comp, comp+env, comp+env+temp, comp+env+dur, comp+env+temp+dur");
  train->add_option("--seed", o.seed, "Seed for the split and the model");
  train->add_option("--data", o.data, "Dataset CSV");
  train->add_flag("--grid-search", o.grid_search, "Cross-validated grid search for rf");
  add_common(train, o);

  auto* compare = app.add_subcommand("compare", "All four forward families on comp and comp+env");
  compare->add_option("--seed", o.seed, "Seed for the split and the models");
  compare->add_option("--data", o.data, "Dataset CSV");
  add_common(compare, o);

  auto* inverse = app.add_subcommand("train-inverse", "Train and score the inverse ensemble");
  inverse->add_option("--seed", o.seed, "Seed for the split and the ensemble");
  inverse->add_option("--data", o.data, "Dataset CSV");
  add_common(inverse, o);

  auto* predict = app.add_subcommand("predict", "Score new rows with a saved model");
  predict->add_option("--direction", o.direction, "forward or inverse");
  predict->add_option("--model", o.model_file, "Saved model JSON")->check(CLI::ExistingFile);
  predict->add_option("--input", o.input, "Query CSV");
  predict->add_option("--units", o.units, "Composition basis of the query file: wt or at");
  add_common(predict, o);

  auto* report = app.add_subcommand("report", "Render SVG charts from result CSVs");
  report->add_option("--input", o.input, "Directory holding result CSVs");
  add_common(report, o);

  auto* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  synth->add_option("--n", o.n, "Number of samples");
  synth->add_option("--noise", o.noise, "Log-normal noise level");
  synth->add_option("--seed", o.seed, "Generator seed");
  add_common(synth, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  o.predict_input = predict->parsed();
  try {
    if (ingest->parsed()) return cmd_ingest(o);
    if (train->parsed()) return cmd_train_forward(o);
    if (compare->parsed()) return cmd_compare(o);
    if (inverse->parsed()) return cmd_train_inverse(o);
    if (predict->parsed()) return cmd_predict(o);
    if (report->parsed()) return cmd_report(o);
    if (synth->parsed()) return cmd_synth(o);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
