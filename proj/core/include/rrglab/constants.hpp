#pragma once

#include <string>
#include <string_view>
#include <vector>

// Closed-form evaluation of the explicit constants of the analysis and the
// finite-size bound expressions built from them.
//
//   c1          12 d^3 eps^-2     overlap drift error coefficient
//   c2           5 d^2 eps^-8     second moment error bound
//   c3          12 d^3 eps^-10    fourth moment error bound
//   c4           8 d   eps^-6     decorrelation bound
//   c5          10 d^2 eps^-9     backward stability constant
//   local_law    C~ d   eps^-5    edge resolvent bound (prefactor C~ supplied)
//   berry_esseen C~ d^3 eps^-10   distribution-distance bound (prefactor C~)
//
// The two inequality-form constants expose their absolute prefactor as a
// parameter; kWorkedExamplePrefactor reproduces the worked finite-size
// evaluation at (d, eps) = (3, 0.01).

namespace rrg {

inline constexpr double kWorkedExamplePrefactor = 100.0;

struct ConstantSpec {
  std::string name;
  std::string description;
  bool has_prefactor = false;  // inequality-form constant
};

const std::vector<ConstantSpec>& constant_table();

// Requires d >= 3 and eps in (0, 1). `prefactor` only affects the
// inequality-form constants.
double evaluate_constant(std::string_view name, int d, double epsilon,
                         double prefactor = 1.0);

enum class RateKind { kSmooth, kIndicator };  // exponents -1/6+eps, -5/36+eps

struct BerryEsseenBound {
  double n_factor = 0;  // N^(exponent)
  double bound = 0;     // berry_esseen constant times the N factor (inf if eps == 0)
};

// Requires N >= 2 and eps in [0, 1). eps == 0 evaluates the N factor alone
// (the constant diverges there).
BerryEsseenBound berry_esseen_bound(double n, int d, double epsilon,
                                    double prefactor = 1.0,
                                    RateKind kind = RateKind::kSmooth);

}  // namespace rrg
