#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace corrml {

inline constexpr std::size_t kElementCount = 32;

// Supported alloying elements, in the fixed column order used for features.
inline constexpr std::array<std::string_view, kElementCount> kElementSymbols = {
    "Al", "Mg", "Si", "Zn", "Li", "Ti", "Ni", "Cu", "As", "Au", "B",
    "C",  "Ca", "Cd", "Co", "Ga", "Hf", "In", "Mo", "Nb", "O",  "Pb",
    "P",  "S",  "Sn", "Th", "V",  "W",  "Zr", "Fe", "Mn", "Cr"};

// Standard atomic weights (CIAAW 2021 conventional/abridged values), g/mol.
inline constexpr std::array<double, kElementCount> kAtomicMasses = {
    26.9815384, 24.305,  28.085,    65.38,     6.94,    47.867,   58.6934,
    63.546,     74.921595, 196.966570, 10.81,  12.011,  40.078,   112.414,
    58.933194,  69.723,  178.486,   114.818,   95.95,   92.90637, 15.999,
    207.2,      30.973761998, 32.06, 118.710,  232.0377, 50.9415, 183.84,
    91.224,     55.845,  54.938043, 51.9961};

// Index of an element symbol in kElementSymbols, or nullopt.
std::optional<std::size_t> element_index(std::string_view symbol);

enum class Basis { Weight, Atomic };

// Percentages per element in a fixed basis. Unlisted balance is allowed
// (sum below 100), sums above 100 are not.
struct ElementComposition {
  std::array<double, kElementCount> percent{};
  Basis basis = Basis::Atomic;

  double& operator[](std::string_view symbol);
  double operator[](std::string_view symbol) const;
  double total() const;

  // Throws ValidationError on negative or non-finite entries or a total
  // above 100 + 1e-6.
  void validate() const;
};

ElementComposition wt_to_at(const ElementComposition& weight);
ElementComposition at_to_wt(const ElementComposition& atomic);

enum class RateUnit { Mpy, Mmpy };

RateUnit parse_rate_unit(std::string_view token);
std::string_view to_string(RateUnit unit);

inline constexpr double kMmPerMil = 0.0254;

double convert_rate(double value, RateUnit from, RateUnit to);

// Letter grade A..D to a representative rate in mpy. Values must be strictly
// increasing from A to D. The default is a convention, not measured data.
struct GradeMap {
  std::array<double, 4> rate_mpy{1.0, 5.0, 20.0, 50.0};

  void validate() const;
  double lookup(char grade) const;
};

struct CorrosionSample {
  std::string id;
  ElementComposition composition;  // atomic basis
  int environment = 0;
  std::optional<double> temperature_c;
  std::optional<double> duration_days;
  double rate_mpy = 0.0;
};

inline constexpr std::size_t kEnvironmentCount = 9;

// Default environment labels, already in lexicographic order.
std::vector<std::string> default_environment_names();

struct Dataset {
  std::vector<CorrosionSample> samples;
  std::vector<std::string> environment_names = default_environment_names();

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }

  // Throws ValidationError if any sample or dataset invariant is violated.
  void validate() const;
};

struct CsvOptions {
  Basis units = Basis::Atomic;
  GradeMap grade_map;
  std::vector<std::string> environment_names = default_environment_names();
  // Reject compositions whose total is below strict_floor.
  bool strict = false;
  double strict_floor = 95.0;
  // Query files may leave both rate and grade empty.
  bool require_rate = true;
};

struct RowIssue {
  std::size_t row = 0;  // 1-based data row (header is row 0)
  std::string message;
};

struct CsvParseResult {
  Dataset dataset;
  std::vector<RowIssue> errors;
  std::vector<RowIssue> notes;
};

// Parses every row and collects row-level errors instead of stopping at the
// first one. Header-level problems (missing or unknown columns) throw.
CsvParseResult parse_csv_collect(const std::filesystem::path& path,
                                 const CsvOptions& options);
CsvParseResult parse_csv_text(std::string_view text, const CsvOptions& options);

// Throws ValidationError listing every row-level error, if any.
Dataset parse_csv(const std::filesystem::path& path, const CsvOptions& options);

// Writes the normalized dataset (atomic basis, mpy) in the ingest CSV schema.
void write_csv(const Dataset& dataset, const std::filesystem::path& path);
std::string to_csv(const Dataset& dataset);

struct DatasetSummary {
  std::size_t samples = 0;
  std::size_t with_temperature = 0;
  std::size_t with_duration = 0;
  std::size_t with_both = 0;
  std::array<std::size_t, kElementCount> element_nonzero{};
  std::array<double, kElementCount> element_max{};
  std::array<std::size_t, kEnvironmentCount> environment_counts{};
};

DatasetSummary summarize(const Dataset& dataset);
std::string format_summary(const DatasetSummary& summary, const Dataset& dataset);

struct SyntheticOptions {
  double temperature_fraction = 164.0 / 331.0;
  double duration_fraction = 187.0 / 331.0;
};

// Noise-free log-rate of the synthetic generator for a given sample.
double synthetic_log_rate(const ElementComposition& atomic, int environment);

// Schema-compatible synthetic corrosion data. Deterministic in seed. The
// trace elements Zn, Ti, Ni, Cu, Fe, Mn are deterministic functions of
// (Al, Si, Mg, environment); rate = exp(synthetic_log_rate) * exp(noise * z).
Dataset generate_synthetic(std::size_t n, std::uint64_t seed, double noise,
                           const SyntheticOptions& options = {});

}  // namespace corrml
