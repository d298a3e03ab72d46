#include "affect/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "affect/error.hpp"

namespace affect::csv {

int Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Table read_table(const std::string& path, bool allow_blank) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  Table table;
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw EmptyInputError("empty file: " + path);
  }
  table.header = split_line(line);

  std::size_t row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != table.header.size()) {
      throw DataError(path + ": row " + std::to_string(row_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(table.header.size()));
    }
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string& cell = cells[c];
      if (cell.empty()) {
        if (!allow_blank) {
          throw DataError(path + ": blank cell at row " +
                          std::to_string(row_no) + " column " +
                          table.header[c]);
        }
        row[c] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double v;
      auto [ptr, ec] =
          std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw DataError(path + ": non-numeric cell \"" + cell + "\" at row " +
                        std::to_string(row_no) + " column " + table.header[c]);
      }
      row[c] = v;
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw EmptyInputError("no data rows: " + path);
  return table;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

void write_table(const std::string& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      if (std::isnan(row[i])) {
        // blank cell round-trips as NaN
      } else {
        out << format_value(row[i]);
      }
    }
    out << '\n';
  }
}

}  // namespace affect::csv
