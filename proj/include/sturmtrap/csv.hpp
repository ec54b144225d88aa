// Plain CSV output with a commented key=value header block.
//
//   # key=value
//   # ...
//   col1,col2,...
//   1.5,2.25,...
//
// Numbers are printed with %.15g so identical inputs give identical bytes.
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sturmtrap/core.hpp"

namespace sturmtrap {

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

using HeaderBlock = std::vector<std::pair<std::string, std::string>>;

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void meta(const std::string& key, const std::string& value) { header_.emplace_back(key, value); }
  void meta(const std::string& key, double value) { header_.emplace_back(key, format_number(value)); }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_.size()) throw Error("CsvTable: row width does not match columns");
    rows_.push_back(values);
  }

  const HeaderBlock& header() const { return header_; }
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }

  std::string str() const {
    std::ostringstream os;
    for (const auto& [k, v] : header_) os << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_number(r[i]);
      os << '\n';
    }
    return os.str();
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << str();
    if (!f) throw Error("write failed for '" + path + "'");
  }

 private:
  std::vector<std::string> columns_;
  HeaderBlock header_;
  std::vector<std::vector<double>> rows_;
};

/// Parses the header block and numeric body of a file written by CsvTable.
inline CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open '" + path + "'");
  std::string line;
  HeaderBlock header;
  std::vector<std::string> cols;
  while (std::getline(f, line)) {
    if (line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq != std::string::npos) header.emplace_back(line.substr(2, eq - 2), line.substr(eq + 1));
      continue;
    }
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    break;
  }
  CsvTable t(cols);
  for (const auto& [k, v] : header) t.meta(k, v);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string c;
    std::vector<double> r;
    while (std::getline(ss, c, ',')) r.push_back(std::stod(c));
    t.row(r);
  }
  return t;
}

}  // namespace sturmtrap
