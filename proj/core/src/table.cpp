#include "rare_reach/table.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include "rare_reach/error.hpp"

namespace rare_reach {
namespace {

std::string csvEscape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string jsonString(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

std::string cellText(const Cell& cell, bool json) {
  return std::visit(
      [json](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          if (json && !std::isfinite(v)) return "null";
          return formatNumber(v);
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(v);
        } else {
          return json ? jsonString(v) : csvEscape(v);
        }
      },
      cell);
}

}  // namespace

std::string formatNumber(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error("formatNumber: to_chars failed");
  return std::string(buf, end);
}

ResultTable::ResultTable(std::vector<std::string> columns)
    : columns_(std::move(columns)) {}

void ResultTable::addRow(std::vector<Cell> row) {
  if (row.size() != columns_.size())
    throw InvalidArgument("ResultTable: row has " + std::to_string(row.size()) +
                          " cells, expected " + std::to_string(columns_.size()));
  rows_.push_back(std::move(row));
}

std::size_t ResultTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i] == name) return i;
  throw InvalidArgument("ResultTable: no column '" + name + "'");
}

double ResultTable::number(std::size_t row, const std::string& name) const {
  const Cell& c = rows_.at(row).at(column(name));
  if (const auto* d = std::get_if<double>(&c)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
  throw InvalidArgument("ResultTable: column '" + name + "' is not numeric");
}

void ResultTable::writeCsv(std::ostream& out) const {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    out << (i ? "," : "") << csvEscape(columns_[i]);
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << cellText(row[i], false);
    out << '\n';
  }
}

void ResultTable::writeJson(std::ostream& out) const {
  out << "{\n  \"columns\": [";
  for (std::size_t i = 0; i < columns_.size(); ++i)
    out << (i ? ", " : "") << jsonString(columns_[i]);
  out << "],\n  \"rows\": [";
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    out << (r ? ",\n    {" : "\n    {");
    for (std::size_t i = 0; i < columns_.size(); ++i)
      out << (i ? ", " : "") << jsonString(columns_[i]) << ": "
          << cellText(rows_[r][i], true);
    out << "}";
  }
  out << (rows_.empty() ? "],\n" : "\n  ],\n");
  out << "  \"metadata\": {";
  bool first = true;
  for (const auto& [k, v] : metadata_) {
    out << (first ? "" : ", ") << jsonString(k) << ": " << jsonString(v);
    first = false;
  }
  out << "}\n}\n";
}

}  // namespace rare_reach
