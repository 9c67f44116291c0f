#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace corrml::io {

// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view text);

// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

std::string escape_csv(std::string_view field);

// Splits text into lines, accepting \n and \r\n. A trailing empty line is
// dropped.
std::vector<std::string_view> split_lines(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// FNV-1a over raw bytes.
std::uint64_t fnv1a(const void* data, std::size_t bytes,
                    std::uint64_t hash = 0xcbf29ce484222325ULL);

std::string hex64(std::uint64_t value);

// Minimal CSV table: header plus string rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  std::string to_string() const;
  static CsvTable parse(std::string_view text);
};

}  // namespace corrml::io
