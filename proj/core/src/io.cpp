#include "rrglab/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace rrg {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_matrix_dump(std::ostream& os, const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("write_matrix_dump: matrix must be square");
  const int n = static_cast<int>(m.rows());
  os << n << '\n';
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) os << ' ';
      os << format_double(m(i, j));
    }
    os << '\n';
  }
}

Eigen::MatrixXd read_matrix_dump(std::istream& is) {
  int n = 0;
  if (!(is >> n) || n <= 0)
    throw std::invalid_argument("read_matrix_dump: missing or invalid dimension header");
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!(is >> m(i, j)))
        throw std::invalid_argument("read_matrix_dump: truncated matrix body");
  return m;
}

CsvWriter::CsvWriter(std::ostream& os, const std::string& header) : os_(os) {
  n_fields_ = 1;
  for (char c : header)
    if (c == ',') ++n_fields_;
  os_ << header << '\n';
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != n_fields_)
    throw std::invalid_argument("CsvWriter: field count does not match header");
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) os_ << ',';
    os_ << fields[i];
  }
  os_ << '\n';
}

}  // namespace rrg
