#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "mrpeval/types.hpp"

namespace mrpeval {

inline constexpr const char* kToolVersion = "mrpeval 0.1.0";

// 17 significant digits; infinities render as "inf"/"-inf", NaN as "nan".
std::string fmt17(double x);

// Deterministic CSV with a "#" header block: tool version, caller-supplied
// config echo lines, and a one-line schema description per column set.
class CsvWriter {
 public:
  CsvWriter(const std::string& path);
  void comment(const std::string& line);
  void columns(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
};

// Matrix as 1-based (row, col, value) triplets, all entries, row-major order.
void write_matrix_csv(const std::string& path, const Matrix& a,
                      const std::vector<std::string>& header);

// Vector as 1-based (state, value) rows.
void write_vector_csv(const std::string& path, const Vector& v,
                      const std::vector<std::string>& header,
                      const std::string& value_name);

}  // namespace mrpeval
