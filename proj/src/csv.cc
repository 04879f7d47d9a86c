#include "mobgap/csv.h"

#include <charconv>
#include <cmath>

#include "fmt/format.h"

#include "mobgap/error.h"

namespace mobgap {

std::optional<std::size_t> CsvTable::column(std::string_view const name) const {
  for (auto i = 0U; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  return std::nullopt;
}

CsvTable parse_csv(std::string_view text) {
  if (text.starts_with("\xEF\xBB\xBF")) {
    text.remove_prefix(3);
  }

  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  auto in_quotes = false;
  auto field_started = false;
  auto at_line_start = true;
  auto have_header = false;

  auto const end_record = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
    auto const blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (!have_header) {
        for (auto& h : record) {
          auto const b = h.find_first_not_of(" \t");
          auto const e = h.find_last_not_of(" \t");
          h = b == std::string::npos ? "" : h.substr(b, e - b + 1);
        }
        table.header = std::move(record);
        have_header = true;
      } else {
        record.resize(table.header.size());
        table.rows.push_back(std::move(record));
      }
    }
    record.clear();
    at_line_start = true;
  };

  for (auto i = 0U; i < text.size(); ++i) {
    auto const c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (at_line_start && !have_header && c == '#') {
      while (i < text.size() && text[i] != '\n') {
        ++i;
      }
      continue;
    }
    at_line_start = false;
    switch (c) {
      case '"':
        if (!field_started) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        break;
      case '\r': break;
      case '\n': end_record(); break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) {
    fail(errc::malformed_document, "unterminated quoted CSV field");
  }
  if (!field.empty() || !record.empty()) {
    end_record();
  }
  return table;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
    s.remove_suffix(1);
  }
  return s;
}

}  // namespace

double parse_double(std::string_view s, std::string_view const field) {
  s = trim(s);
  auto value = 0.0;
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() ||
      !std::isfinite(value)) {
    fail(errc::malformed_document,
         fmt::format("field {}: not a number: '{}'", field, s));
  }
  return value;
}

std::int64_t parse_int(std::string_view s, std::string_view const field) {
  s = trim(s);
  std::int64_t value = 0;
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    fail(errc::malformed_document,
         fmt::format("field {}: not an integer: '{}'", field, s));
  }
  return value;
}

std::string csv_escape(std::string_view const s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) {
    return std::string{s};
  }
  std::string out{"\""};
  for (auto const c : s) {
    if (c == '"') {
      out.push_back('"');
    }
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_csv_row(std::ostream& out, std::vector<std::string> const& fields) {
  for (auto i = 0U; i < fields.size(); ++i) {
    if (i != 0U) {
      out << ',';
    }
    out << csv_escape(fields[i]);
  }
  out << '\n';
}

std::string format_double(double const v) { return fmt::format("{}", v); }

}  // namespace mobgap
