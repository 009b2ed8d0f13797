#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace rare_reach {

using Cell = std::variant<double, std::int64_t, std::string>;

/// Shortest round-trip decimal text for a double, independent of locale.
std::string formatNumber(double value);

/**
 * Tabular experiment output.
 *
 * CSV: comma separated, '.' decimal, mandatory header row, '\n' line ends.
 * JSON: {"columns": [...], "rows": [{...}], "metadata": {...}}.
 */
class ResultTable {
 public:
  ResultTable() = default;
  explicit ResultTable(std::vector<std::string> columns);

  void addRow(std::vector<Cell> row);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  /// Index of a named column; throws InvalidArgument if absent.
  std::size_t column(const std::string& name) const;
  /// Numeric value at (row, column name); integers are widened.
  double number(std::size_t row, const std::string& name) const;

  void setMetadata(const std::string& key, std::string value) {
    metadata_[key] = std::move(value);
  }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  void writeCsv(std::ostream& out) const;
  void writeJson(std::ostream& out) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::map<std::string, std::string> metadata_;
};

}  // namespace rare_reach
