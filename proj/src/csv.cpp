#include "mrpeval/csv.hpp"

#include <cmath>
#include <cstdio>

namespace mrpeval {

std::string fmt17(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path) {
  if (!out_) throw ConfigError("cannot open output file " + path);
  out_ << "# " << kToolVersion << "\n";
}

void CsvWriter::comment(const std::string& line) { out_ << "# " << line << "\n"; }

void CsvWriter::columns(const std::vector<std::string>& names) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i) out_ << ',';
    out_ << names[i];
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << "\n";
}

void CsvWriter::close() {
  out_.flush();
  if (!out_) throw NumericalError("write failed while closing a CSV file");
  out_.close();
}

void write_matrix_csv(const std::string& path, const Matrix& a,
                      const std::vector<std::string>& header) {
  CsvWriter w(path);
  for (const auto& h : header) w.comment(h);
  w.columns({"row", "col", "value"});
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      w.row({std::to_string(i + 1), std::to_string(j + 1), fmt17(a(i, j))});
    }
  }
  w.close();
}

void write_vector_csv(const std::string& path, const Vector& v,
                      const std::vector<std::string>& header,
                      const std::string& value_name) {
  CsvWriter w(path);
  for (const auto& h : header) w.comment(h);
  w.columns({"state", value_name});
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    w.row({std::to_string(i + 1), fmt17(v[i])});
  }
  w.close();
}

}  // namespace mrpeval
