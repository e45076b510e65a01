#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tgwish/errors.hpp"

namespace tgwish {

// Minimal CSV: comma-separated, first non-comment line is the header,
// '#' lines are skipped. No quoting (labels here never contain commas).
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int col(const std::string& name) const {
    for (std::size_t k = 0; k < columns.size(); ++k)
      if (columns[k] == name) return static_cast<int>(k);
    return -1;
  }

  int require_col(const std::string& name) const {
    const int k = col(name);
    if (k < 0) throw data_error("csv: missing required column '" + name + "'");
    return k;
  }

  double num(std::size_t row, int c) const {
    const auto& s = rows[row][static_cast<std::size_t>(c)];
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw data_error("csv: expected a number, got '" + s + "'");
    }
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("csv: cannot open '" + path + "'");
  CsvTable t;
  std::string line;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string field;
    while (std::getline(ss, field, ',')) {
      // trim
      const auto b = field.find_first_not_of(" \t\r");
      const auto e = field.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return out;
  };
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (t.columns.empty()) {
      t.columns = split(line);
      continue;
    }
    auto fields = split(line);
    if (fields.empty()) continue;
    if (fields.size() != t.columns.size())
      throw data_error("csv: row with " + std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(t.columns.size()) + " in '" + path + "'");
    t.rows.push_back(std::move(fields));
  }
  if (t.columns.empty()) throw data_error("csv: '" + path + "' has no header");
  return t;
}

}  // namespace tgwish
