#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mrl::harness {

// Comma-separated table with a header row. Fields never contain commas,
// quotes or newlines, so no quoting is written or accepted.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a column; throws MalformedCsv when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  // Numeric cell; throws MalformedCsv when the cell is not a number.
  double number(std::size_t row, std::size_t col) const;
};

// Throws MalformedCsv for empty input, ragged rows or quoted fields.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string to_csv(const CsvTable& table);
void write_csv(const CsvTable& table, const std::filesystem::path& path);

// Shortest text that reads back to the same double.
std::string format_double(double x);

// Whole-file helpers; throw Io on failure.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace mrl::harness
