#include "rrglab/constants.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rrg {

namespace {

void check_domain(int d, double epsilon) {
  if (d < 3) throw std::invalid_argument("evaluate_constant: need d >= 3");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("evaluate_constant: need epsilon in (0, 1)");
}

}  // namespace

const std::vector<ConstantSpec>& constant_table() {
  static const std::vector<ConstantSpec> table = {
      {"c1", "overlap drift error coefficient", false},
      {"c2", "second moment error bound", false},
      {"c3", "fourth moment error bound", false},
      {"c4", "decorrelation bound", false},
      {"c5", "backward stability constant", false},
      {"local_law", "edge resolvent bound", true},
      {"berry_esseen", "distribution-distance bound", true},
  };
  return table;
}

double evaluate_constant(std::string_view name, int d, double epsilon,
                         double prefactor) {
  check_domain(d, epsilon);
  const double dd = static_cast<double>(d);
  const auto inv = [&](int k) { return std::pow(epsilon, -double(k)); };
  if (name == "c1") return 12.0 * dd * dd * dd * inv(2);
  if (name == "c2") return 5.0 * dd * dd * inv(8);
  if (name == "c3") return 12.0 * dd * dd * dd * inv(10);
  if (name == "c4") return 8.0 * dd * inv(6);
  if (name == "c5") return 10.0 * dd * dd * inv(9);
  if (name == "local_law") return prefactor * dd * inv(5);
  if (name == "berry_esseen") return prefactor * dd * dd * dd * inv(10);
  throw std::invalid_argument("evaluate_constant: unknown constant '" +
                              std::string(name) + "'");
}

BerryEsseenBound berry_esseen_bound(double n, int d, double epsilon,
                                    double prefactor, RateKind kind) {
  if (n < 2) throw std::invalid_argument("berry_esseen_bound: need N >= 2");
  if (epsilon < 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("berry_esseen_bound: need epsilon in [0, 1)");
  const double base =
      kind == RateKind::kSmooth ? -1.0 / 6.0 : -5.0 / 36.0;
  BerryEsseenBound out;
  out.n_factor = std::pow(n, base + epsilon);
  out.bound = epsilon > 0.0
                  ? evaluate_constant("berry_esseen", d, epsilon, prefactor) *
                        out.n_factor
                  : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace rrg
