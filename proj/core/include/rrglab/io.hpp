#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

// Text formats shared by the command line tool and the test fixtures.
//
// Matrix dump: first line the dimension, then one row per line, row-major,
// entries printed with 17 significant digits so doubles round-trip exactly.

namespace rrg {

void write_matrix_dump(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_dump(std::istream& is);

// Minimal CSV writer: caller supplies the exact header once, then rows.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, const std::string& header);
  void row(const std::vector<std::string>& fields);

 private:
  std::ostream& os_;
  size_t n_fields_;
};

std::string format_double(double v);  // %.17g

}  // namespace rrg
