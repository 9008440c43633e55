#pragma once

#include <string>
#include <vector>

namespace sbi {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t col(const std::string& name) const;  // throws UsageError if absent
  std::vector<double> column(std::size_t j) const;
};

// Comma-separated, header row, '.' decimal, newline-terminated rows.
// Values are written with %.17g so a rerun is byte-identical.
void write_csv(const std::string& path, const CsvTable& table);
CsvTable read_csv(const std::string& path);

}  // namespace sbi
