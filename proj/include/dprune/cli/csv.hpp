#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace dprune::cli {

// Fixed-precision number text so reruns produce identical bytes.
// NaN prints as "nan".
std::string fmt(double x, int precision = 6);
std::string fmt(std::size_t x);

// Column-checked CSV table, written in one go.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  // Throws ShapeError when the row width differs from the header.
  void add(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string str() const;
  // Creates parent directories; writes to a temporary and renames.
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Reads a CSV produced by CsvTable. Throws FormatError on ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace dprune::cli
