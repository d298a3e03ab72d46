#pragma once

#include <string>
#include <vector>

namespace affect::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // all-numeric body

  int column(const std::string& name) const;  // -1 when absent
  std::size_t ncols() const { return header.size(); }
  std::size_t nrows() const { return rows.size(); }
};

// Numeric CSV with a header row. With allow_blank, empty cells become NaN
// (label files use that for the invalid marker); otherwise any non-numeric
// cell is a parse error naming row and column.
Table read_table(const std::string& path, bool allow_blank = false);
void write_table(const std::string& path, const Table& table);

// 9 significant digits, matching the CLI output contract.
std::string format_value(double v);

}  // namespace affect::csv
