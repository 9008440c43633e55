#include "sbi/csvio.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "sbi/common.hpp"

namespace sbi {

std::size_t CsvTable::col(const std::string& name) const {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return j;
  throw UsageError("CSV column '" + name + "' not found");
}

std::vector<double> CsvTable::column(std::size_t j) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.at(j));
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream os(path);
  if (!os) throw UsageError("cannot open " + path + " for writing");
  for (std::size_t j = 0; j < table.header.size(); ++j) os << (j ? "," : "") << table.header[j];
  os << "\n";
  char buf[40];
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
      os << (j ? "," : "") << buf;
    }
    os << "\n";
  }
}

CsvTable read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot open " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(is, line)) throw UsageError("empty CSV " + path);
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) t.header.push_back(cell);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != t.header.size()) throw UsageError("ragged CSV row in " + path);
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace sbi
