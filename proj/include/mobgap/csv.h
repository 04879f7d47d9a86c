#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace mobgap {

// RFC 4180 table with a header row. Lines starting with '#' before the header
// are treated as metadata comments and skipped.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);

double parse_double(std::string_view s, std::string_view field);
std::int64_t parse_int(std::string_view s, std::string_view field);

std::string csv_escape(std::string_view);

// Writes one CSV record terminated by '\n'.
void write_csv_row(std::ostream&, std::vector<std::string> const& fields);

// Locale-independent shortest round-trip formatting of a double.
std::string format_double(double);

}  // namespace mobgap
