#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rrglab/overlaps.hpp"

// Distribution-distance machinery: exact Kolmogorov distances against the
// standard normal, indicator mollification, unbiased cumulant estimators
// (k-statistics) and power-law rate fitting.

namespace rrg {

struct EcdfSummary {
  std::vector<double> sorted_samples;
  int n() const { return static_cast<int>(sorted_samples.size()); }
};

EcdfSummary make_ecdf(std::vector<double> samples);

// Phi(x) through the complementary error function; absolute error ~1e-16.
double normal_cdf(double x);

// sup_x |F_n(x) - Phi(x)| evaluated exactly at the jump points:
//   max_i max( Phi(x_i) - (i-1)/n, i/n - Phi(x_i) ).
double ks_distance_to_normal(const EcdfSummary& ecdf);

// Two-sample Kolmogorov statistic sup_x |F_a(x) - F_b(x)| by merge scan,
// and the large-sample rejection threshold at the given level:
//   c(alpha) sqrt((n_a+n_b)/(n_a n_b)),  c(alpha) = sqrt(-ln(alpha/2)/2).
double two_sample_ks_statistic(std::span<const double> a, std::span<const double> b);
double two_sample_ks_threshold(std::size_t n_a, std::size_t n_b, double alpha);

// Smooth sandwich approximation of 1_{(-inf, x]}: the indicator of the
// delta-neighbourhood convolved with the bump exp(-1/(1-s^2)) scaled to
// integrate to one. Satisfies 1_A <= f_delta <= 1_{A_{2delta}} and
// |f_delta^{(k)}| <= C_k delta^{-k}.
class Mollifier {
 public:
  Mollifier(double set_boundary, double delta);
  double operator()(double x) const;
  double delta() const { return delta_; }
  double boundary() const { return boundary_; }

 private:
  double boundary_;
  double delta_;
};

Mollifier build_mollifier(double set_boundary, double delta);

// |mean f_delta(a) - mean f_delta(b)|
double smoothed_expectation_gap(std::span<const double> a,
                                std::span<const double> b,
                                const Mollifier& f);

struct CumulantEstimate {
  std::array<double, 4> k{};   // k1..k4 (unbiased k-statistics)
  std::array<double, 4> se{};  // jackknife standard errors
  int samples = 0;
};

// Requires >= 1000 samples (the order-4 statistic is noisy below that).
CumulantEstimate estimate_cumulants(std::span<const double> samples);

struct RateFit {
  double exponent = 0;
  double intercept = 0;  // log-scale intercept
  double residual = 0;   // rms residual of log(statistic)
};

// Least squares of log(statistic) on log(abscissa). Requires >= 3 points
// with positive statistics.
RateFit fit_rate(std::span<const std::pair<double, double>> points);

// Maximum one-dimensional Kolmogorov distance to Phi over seeded random
// unit projections of the joint overlap rows. A measurable stand-in for a
// multivariate Gaussian distance; it is reported as the projection proxy,
// not as a convex-set metric. mK == 1 uses the coordinate axis itself.
double multivariate_gaussian_distance(const JointOverlapMatrix& joint,
                                      int n_projections, std::uint64_t seed);

}  // namespace rrg
