#pragma once

// CSV in the one dialect this project reads and writes: comma separator,
// '.' decimal point, LF line endings, a header row, and doubles printed at
// 17 significant digits so text -> value -> text is a fixed point.

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nms/error.hpp"

namespace nms::csv {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Optional cell: empty text when absent (failed sweep points).
inline std::string format_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string{}; }

inline void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

inline void write_columns(std::ostream& out, const std::vector<std::string>& header,
                          const std::vector<const std::vector<double>*>& columns) {
  write_row(out, header);
  const std::size_t rows = columns.empty() ? 0 : columns.front()->size();
  std::vector<std::string> cells(columns.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) cells[c] = format_double((*columns[c])[r]);
    write_row(out, cells);
  }
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::optional<double> parse_double(std::string text) {
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ' || text.back() == '\t')) text.pop_back();
  const auto b = text.find_first_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  text = text.substr(b);
  std::size_t used = 0;
  try {
    const double v = std::stod(text, &used);
    if (used != text.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

struct Table {
  std::vector<std::string> header;  // empty when the file had none
  std::vector<std::vector<double>> columns;
};

/// Numeric table; the first line is taken as a header when it does not
/// parse as numbers. Every data row must have `expected_columns` cells
/// (0 = whatever the first row has).
inline Table read_table(std::istream& in, std::size_t expected_columns = 0) {
  Table t;
  std::string line;
  int line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_line(line);
    std::vector<double> values;
    bool numeric = true;
    for (const auto& c : cells) {
      const auto v = parse_double(c);
      if (!v) {
        numeric = false;
        break;
      }
      values.push_back(*v);
    }
    if (first && !numeric) {
      t.header = cells;
      first = false;
      continue;
    }
    if (!numeric) throw DomainError("csv line " + std::to_string(line_no) + ": non-numeric cell");
    if (expected_columns == 0) expected_columns = values.size();
    if (values.size() != expected_columns)
      throw DomainError("csv line " + std::to_string(line_no) + ": expected " + std::to_string(expected_columns) +
                        " columns, got " + std::to_string(values.size()));
    if (t.columns.empty()) t.columns.resize(expected_columns);
    for (std::size_t c = 0; c < values.size(); ++c) t.columns[c].push_back(values[c]);
    first = false;
  }
  return t;
}

/// Two-column external spectrum `freq_hz,value`.
struct ExternalSpectrum {
  std::vector<double> freq_hz;
  std::vector<double> value;
};

inline ExternalSpectrum read_spectrum(std::istream& in) {
  auto t = read_table(in, 2);
  if (t.columns.empty()) throw DomainError("spectrum csv has no data rows");
  for (std::size_t i = 1; i < t.columns[0].size(); ++i)
    if (!(t.columns[0][i] > t.columns[0][i - 1])) throw DomainError("spectrum csv frequencies must increase strictly");
  return {std::move(t.columns[0]), std::move(t.columns[1])};
}

}  // namespace nms::csv
