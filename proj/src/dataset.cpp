#include "corrml/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_set>

#include "corrml/errors.hpp"
#include "corrml/io.hpp"
#include "corrml/random.hpp"

namespace corrml {

std::optional<std::size_t> element_index(std::string_view symbol) {
  for (std::size_t i = 0; i < kElementCount; ++i)
    if (kElementSymbols[i] == symbol) return i;
  return std::nullopt;
}

namespace {

std::size_t require_element(std::string_view symbol) {
  auto idx = element_index(symbol);
  if (!idx) throw ValidationError("unknown element '" + std::string(symbol) + "'");
  return *idx;
}

}  // namespace

double& ElementComposition::operator[](std::string_view symbol) {
  return percent[require_element(symbol)];
}

double ElementComposition::operator[](std::string_view symbol) const {
  return percent[require_element(symbol)];
}

double ElementComposition::total() const {
  double sum = 0.0;
  for (double p : percent) sum += p;
  return sum;
}

void ElementComposition::validate() const {
  for (std::size_t i = 0; i < kElementCount; ++i) {
    if (!std::isfinite(percent[i]) || percent[i] < 0.0)
      throw ValidationError("element " + std::string(kElementSymbols[i]) +
                            " has invalid percentage " + io::format_double(percent[i]));
  }
  if (total() > 100.0 + 1e-6)
    throw ValidationError("composition sums to " + io::format_double(total()) + " > 100");
}

namespace {

// Converts percentages through per-element factors and renormalizes to 100.
ElementComposition reweigh(const ElementComposition& in, Basis out_basis, bool divide) {
  std::array<double, kElementCount> scaled{};
  double sum = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < kElementCount; ++i) {
    if (in.percent[i] < 0.0 || !std::isfinite(in.percent[i]))
      throw ValidationError("composition entry for " + std::string(kElementSymbols[i]) +
                            " is negative or non-finite");
    if (in.percent[i] != 0.0) any = true;
    scaled[i] = divide ? in.percent[i] / kAtomicMasses[i] : in.percent[i] * kAtomicMasses[i];
    sum += scaled[i];
  }
  if (!any) throw ValidationError("composition is empty or all zero");
  ElementComposition out;
  out.basis = out_basis;
  for (std::size_t i = 0; i < kElementCount; ++i) out.percent[i] = scaled[i] / sum * 100.0;
  return out;
}

}  // namespace

ElementComposition wt_to_at(const ElementComposition& weight) {
  if (weight.basis != Basis::Weight) throw ValidationError("wt_to_at expects weight basis");
  return reweigh(weight, Basis::Atomic, true);
}

ElementComposition at_to_wt(const ElementComposition& atomic) {
  if (atomic.basis != Basis::Atomic) throw ValidationError("at_to_wt expects atomic basis");
  return reweigh(atomic, Basis::Weight, false);
}

RateUnit parse_rate_unit(std::string_view token) {
  if (token == "mpy") return RateUnit::Mpy;
  if (token == "mmpy") return RateUnit::Mmpy;
  throw ValidationError("unknown rate unit '" + std::string(token) + "' (expected mpy or mmpy)");
}

std::string_view to_string(RateUnit unit) { return unit == RateUnit::Mpy ? "mpy" : "mmpy"; }

double convert_rate(double value, RateUnit from, RateUnit to) {
  if (from == to) return value;
  return from == RateUnit::Mpy ? value * kMmPerMil : value / kMmPerMil;
}

void GradeMap::validate() const {
  for (std::size_t i = 0; i < rate_mpy.size(); ++i) {
    if (!std::isfinite(rate_mpy[i]) || rate_mpy[i] < 0.0)
      throw ValidationError("grade map rates must be finite and non-negative");
    if (i > 0 && !(rate_mpy[i] > rate_mpy[i - 1]))
      throw ValidationError("grade map must be strictly increasing from A to D");
  }
}

double GradeMap::lookup(char grade) const {
  if (grade >= 'a' && grade <= 'd') grade = static_cast<char>(grade - 'a' + 'A');
  if (grade < 'A' || grade > 'D')
    throw ValidationError(std::string("unknown grade '") + grade + "'");
  return rate_mpy[static_cast<std::size_t>(grade - 'A')];
}

std::vector<std::string> default_environment_names() {
  return {"brackish_water", "distilled_water", "marine_atmosphere",
          "nacl_solution",  "salt_spray",      "seawater",
          "synthetic_seawater", "tap_water",   "tropical_seawater"};
}

void Dataset::validate() const {
  if (environment_names.size() != kEnvironmentCount)
    throw ValidationError("expected exactly 9 environment categories");
  std::unordered_set<std::string> ids;
  for (const auto& s : samples) {
    if (!ids.insert(s.id).second) throw ValidationError("duplicate sample id '" + s.id + "'");
    if (s.environment < 0 || s.environment >= static_cast<int>(kEnvironmentCount))
      throw ValidationError("sample '" + s.id + "' has environment id out of range");
    if (!std::isfinite(s.rate_mpy) || s.rate_mpy < 0.0)
      throw ValidationError("sample '" + s.id + "' has invalid rate");
    if (s.duration_days && !(*s.duration_days > 0.0))
      throw ValidationError("sample '" + s.id + "' has non-positive duration");
    if (s.temperature_c && !std::isfinite(*s.temperature_c))
      throw ValidationError("sample '" + s.id + "' has non-finite temperature");
    s.composition.validate();
  }
}

namespace {

constexpr std::array<std::string_view, 7> kRequiredColumns = {
    "id", "env", "temp_c", "duration_days", "rate", "rate_unit", "grade"};

std::vector<std::string> sorted_environments(std::vector<std::string> names) {
  std::sort(names.begin(), names.end());
  if (names.size() != kEnvironmentCount)
    throw ValidationError("exactly 9 environment labels must be configured");
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw ValidationError("environment labels must be unique");
  return names;
}

double parse_number(const std::string& cell, const char* column) {
  auto v = io::parse_double(cell);
  if (!v || !std::isfinite(*v))
    throw ValidationError(std::string("unparseable numeric cell in '") + column + "': '" + cell + "'");
  return *v;
}

}  // namespace

CsvParseResult parse_csv_text(std::string_view text, const CsvOptions& options) {
  options.grade_map.validate();
  CsvParseResult result;
  result.dataset.environment_names = sorted_environments(options.environment_names);
  const auto& env_names = result.dataset.environment_names;

  const auto table = io::CsvTable::parse(text);
  std::array<std::size_t, kRequiredColumns.size()> required{};
  for (std::size_t i = 0; i < kRequiredColumns.size(); ++i) {
    auto c = table.column(kRequiredColumns[i]);
    if (!c) throw ValidationError("missing required column '" + std::string(kRequiredColumns[i]) + "'");
    required[i] = *c;
  }
  std::vector<std::pair<std::size_t, std::size_t>> element_columns;  // (column, element)
  std::set<std::string> seen_headers;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto& name = table.header[c];
    if (!seen_headers.insert(name).second) throw ValidationError("duplicate column '" + name + "'");
    if (std::find(kRequiredColumns.begin(), kRequiredColumns.end(), name) != kRequiredColumns.end())
      continue;
    auto e = element_index(name);
    if (!e) throw ValidationError("unknown element column '" + name + "'");
    element_columns.emplace_back(c, *e);
  }

  std::unordered_set<std::string> ids;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t row_number = r + 1;
    auto row = table.rows[r];
    row.resize(table.header.size());
    auto cell = [&](std::size_t which) -> const std::string& { return row[required[which]]; };
    try {
      if (table.rows[r].size() != table.header.size())
        throw ValidationError("expected " + std::to_string(table.header.size()) + " fields, found " +
                              std::to_string(table.rows[r].size()));
      CorrosionSample sample;
      sample.id = cell(0);
      if (sample.id.empty()) throw ValidationError("empty id");
      if (ids.count(sample.id)) throw ValidationError("duplicate id '" + sample.id + "'");

      auto env_it = std::find(env_names.begin(), env_names.end(), cell(1));
      if (env_it == env_names.end()) throw ValidationError("unknown environment label '" + cell(1) + "'");
      sample.environment = static_cast<int>(env_it - env_names.begin());

      if (!cell(2).empty()) sample.temperature_c = parse_number(cell(2), "temp_c");
      if (!cell(3).empty()) {
        sample.duration_days = parse_number(cell(3), "duration_days");
        if (!(*sample.duration_days > 0.0)) throw ValidationError("duration_days must be > 0");
      }

      const std::string& rate = cell(4);
      const std::string& unit = cell(5);
      const std::string& grade = cell(6);
      if (!unit.empty()) parse_rate_unit(unit);
      if (!rate.empty()) {
        if (unit.empty()) throw ValidationError("rate given without rate_unit");
        const double value = parse_number(rate, "rate");
        if (value < 0.0) throw ValidationError("negative rate");
        sample.rate_mpy = convert_rate(value, parse_rate_unit(unit), RateUnit::Mpy);
        if (!grade.empty())
          result.notes.push_back({row_number, "both rate and grade present; using rate"});
      } else if (!grade.empty()) {
        if (grade.size() != 1) throw ValidationError("unknown grade '" + grade + "'");
        sample.rate_mpy = options.grade_map.lookup(grade[0]);
      } else if (options.require_rate) {
        throw ValidationError("neither rate nor grade given");
      }

      ElementComposition comp;
      comp.basis = options.units;
      for (auto [c, e] : element_columns) {
        if (row[c].empty()) continue;
        const double v = parse_number(row[c], std::string(kElementSymbols[e]).c_str());
        if (v < 0.0) throw ValidationError("negative percentage for " + std::string(kElementSymbols[e]));
        comp.percent[e] = v;
      }
      comp.validate();
      if (options.strict && comp.total() < options.strict_floor)
        throw ValidationError("composition total " + io::format_double(comp.total()) +
                              " below strict floor " + io::format_double(options.strict_floor));
      sample.composition = options.units == Basis::Weight ? wt_to_at(comp) : comp;

      ids.insert(sample.id);
      result.dataset.samples.push_back(std::move(sample));
    } catch (const ValidationError& e) {
      result.errors.push_back({row_number, e.what()});
    }
  }
  return result;
}

CsvParseResult parse_csv_collect(const std::filesystem::path& path, const CsvOptions& options) {
  return parse_csv_text(io::read_file(path), options);
}

Dataset parse_csv(const std::filesystem::path& path, const CsvOptions& options) {
  auto result = parse_csv_collect(path, options);
  if (!result.errors.empty()) {
    std::ostringstream msg;
    msg << path.string() << ": " << result.errors.size() << " invalid row(s)";
    for (const auto& e : result.errors) msg << "\n  row " << e.row << ": " << e.message;
    throw ValidationError(msg.str());
  }
  return std::move(result.dataset);
}

std::string to_csv(const Dataset& dataset) {
  io::CsvTable table;
  table.header.assign(kRequiredColumns.begin(), kRequiredColumns.end());
  for (auto s : kElementSymbols) table.header.emplace_back(s);
  auto opt = [](const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); };
  for (const auto& s : dataset.samples) {
    std::vector<std::string> row = {s.id,
                                    dataset.environment_names.at(static_cast<std::size_t>(s.environment)),
                                    opt(s.temperature_c),
                                    opt(s.duration_days),
                                    io::format_double(s.rate_mpy),
                                    "mpy",
                                    ""};
    for (double p : s.composition.percent) row.push_back(p == 0.0 ? "0" : io::format_double(p));
    table.rows.push_back(std::move(row));
  }
  return table.to_string();
}

void write_csv(const Dataset& dataset, const std::filesystem::path& path) {
  io::write_file(path, to_csv(dataset));
}

DatasetSummary summarize(const Dataset& dataset) {
  DatasetSummary out;
  out.samples = dataset.size();
  for (const auto& s : dataset.samples) {
    out.with_temperature += s.temperature_c.has_value();
    out.with_duration += s.duration_days.has_value();
    out.with_both += s.temperature_c.has_value() && s.duration_days.has_value();
    if (s.environment >= 0 && s.environment < static_cast<int>(kEnvironmentCount))
      ++out.environment_counts[static_cast<std::size_t>(s.environment)];
    for (std::size_t i = 0; i < kElementCount; ++i) {
      const double p = s.composition.percent[i];
      if (p > 0.0) {
        ++out.element_nonzero[i];
        out.element_max[i] = std::max(out.element_max[i], p);
      }
    }
  }
  return out;
}

std::string format_summary(const DatasetSummary& summary, const Dataset& dataset) {
  std::ostringstream out;
  out << "Variable,Number of Samples\n";
  out << "Elements (Count: " << kElementCount << ")," << summary.samples << "\n";
  out << "Environments (Count: " << kEnvironmentCount << ")," << summary.samples << "\n";
  out << "Temperature (deg C)," << summary.with_temperature << "\n";
  out << "Duration (days)," << summary.with_duration << "\n";
  out << "Temperature and Duration," << summary.with_both << "\n";
  out << "Corrosion Rate (mils/year)," << summary.samples << "\n";
  out << "\nElement,Count,Max\n";
  for (std::size_t i = 0; i < kElementCount; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", summary.element_max[i]);
    out << kElementSymbols[i] << "," << summary.element_nonzero[i] << "," << buf << "\n";
  }
  out << "\nEnvironment,Count\n";
  for (std::size_t e = 0; e < kEnvironmentCount && e < dataset.environment_names.size(); ++e)
    out << dataset.environment_names[e] << "," << summary.environment_counts[e] << "\n";
  return out.str();
}

// Synthetic generator.
//
// Majors: a family draw picks Al-rich (45%), Mg-rich (20%) or other-base
// (35%) ranges for Al, Mg and Si. The balance R = 100 - Al - Mg - Si goes to
// Ti and Mn by small fixed fractions and to Zn, Ni, Cu, Fe by a softmax whose
// logits depend on (Al, Si, Mg, environment) only.
//
// Rate: ln(rate) = env_level[e] + sum_k coef_k * x_k with x = at% / 100,
// multiplied by exp(noise * z), z ~ N(0, 1).

namespace {

constexpr std::array<double, kEnvironmentCount> kEnvLevel = {0.2, -1.2, 0.8, 1.0, 1.4,
                                                             0.6, 0.9, -0.6, 1.2};

struct TraceShares {
  double ti, mn, zn, ni, cu, fe;
};

TraceShares trace_shares(double al, double si, double mg, int env) {
  const double a = al / 100.0, s = si / 100.0, m = mg / 100.0;
  const double angle = 2.0 * std::numbers::pi * env / static_cast<double>(kEnvironmentCount);
  const double c = std::cos(angle), sn = std::sin(angle);
  TraceShares t{};
  t.ti = 0.01 * (1.0 + 5.0 * s);
  t.mn = 0.012 * (1.0 + 0.5 * c);
  const double z_zn = 1.5 * c + 3.0 * m;
  const double z_ni = 1.5 * sn - 2.0 * a;
  const double z_cu = -1.5 * c + 10.0 * s;
  const double z_fe = -1.5 * sn;
  const double zmax = std::max({z_zn, z_ni, z_cu, z_fe});
  const double e_zn = std::exp(z_zn - zmax), e_ni = std::exp(z_ni - zmax);
  const double e_cu = std::exp(z_cu - zmax), e_fe = std::exp(z_fe - zmax);
  const double rest = (1.0 - t.ti - t.mn) / (e_zn + e_ni + e_cu + e_fe);
  t.zn = e_zn * rest;
  t.ni = e_ni * rest;
  t.cu = e_cu * rest;
  t.fe = e_fe * rest;
  return t;
}

}  // namespace

double synthetic_log_rate(const ElementComposition& atomic, int environment) {
  auto x = [&](std::string_view sym) { return atomic[sym] / 100.0; };
  return kEnvLevel.at(static_cast<std::size_t>(environment)) + 2.5 * x("Cu") + 1.5 * x("Mg") -
         1.2 * x("Al") + 6.0 * x("Si") + 1.0 * x("Zn") - 0.8 * x("Ni") + 0.5 * x("Fe") +
         20.0 * x("Mn");
}

Dataset generate_synthetic(std::size_t n, std::uint64_t seed, double noise,
                           const SyntheticOptions& options) {
  if (n == 0) throw ValidationError("generate_synthetic: n must be positive");
  if (!(noise >= 0.0)) throw ValidationError("generate_synthetic: noise must be non-negative");
  const auto in_unit = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!in_unit(options.temperature_fraction) || !in_unit(options.duration_fraction))
    throw ValidationError("generate_synthetic: fractions must lie in [0, 1]");

  Rng rng(seed);
  Dataset d;
  d.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    CorrosionSample s;
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    s.id = id;
    s.environment = static_cast<int>(rng.index(kEnvironmentCount));

    double al, mg, si;
    const double family = rng.uniform();
    if (family < 0.45) {
      al = rng.uniform(85.0, 99.5);
      mg = rng.uniform(0.0, std::min(5.0, 100.0 - al));
      si = rng.uniform(0.0, std::min(7.0, 100.0 - al - mg));
    } else if (family < 0.65) {
      mg = rng.uniform(85.0, 99.5);
      al = rng.uniform(0.0, std::min(10.0, 100.0 - mg));
      si = rng.uniform(0.0, std::min(1.0, 100.0 - al - mg));
    } else {
      al = rng.uniform(0.0, 10.0);
      mg = rng.uniform(0.0, 2.0);
      si = rng.uniform(0.0, 3.0);
    }
    const double balance = std::max(0.0, 100.0 - al - mg - si);
    const auto t = trace_shares(al, si, mg, s.environment);
    auto& comp = s.composition;
    comp.basis = Basis::Atomic;
    comp["Al"] = al;
    comp["Mg"] = mg;
    comp["Si"] = si;
    comp["Ti"] = balance * t.ti;
    comp["Mn"] = balance * t.mn;
    comp["Zn"] = balance * t.zn;
    comp["Ni"] = balance * t.ni;
    comp["Cu"] = balance * t.cu;
    comp["Fe"] = balance * t.fe;

    const double z = rng.normal();
    s.rate_mpy = std::exp(synthetic_log_rate(comp, s.environment) + noise * z);
    s.temperature_c = rng.uniform(5.0, 80.0);
    s.duration_days = rng.uniform(1.0, 3650.0);
    d.samples.push_back(std::move(s));
  }

  // Exact presence counts, chosen by independent permutations.
  auto keep_first = [&](double fraction, auto member) {
    const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t k = keep; k < n; ++k) (d.samples[order[k]].*member).reset();
  };
  keep_first(options.temperature_fraction, &CorrosionSample::temperature_c);
  keep_first(options.duration_fraction, &CorrosionSample::duration_days);
  return d;
}

}  // namespace corrml
