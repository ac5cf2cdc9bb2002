#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace homlab {

/// Shortest round-trippable text for a double ("%.17g", C locale).
std::string format_double(double value);

/// Comma-joined row terminated by '\n'.
void write_row(std::ostream& out, const std::vector<std::string>& cells);

/// A parsed CSV document. Lines starting with '#' are collected as metadata
/// ("# key=value key=value"), the first other line is the header.
struct CsvTable {
  std::map<std::string, std::string> meta;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
  const std::string& text(std::size_t row, std::string_view name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace homlab
