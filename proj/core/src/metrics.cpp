#include "rrglab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rrglab/rng.hpp"

namespace rrg {

namespace {

// integral of exp(-1/(1-s^2)) over [-1, 1], adaptive Simpson to 1e-12
double bump_raw(double s) {
  const double t = 1.0 - s * s;
  return t > 0 ? std::exp(-1.0 / t) : 0.0;
}

double simpson(double (*f)(double), double a, double b, double fa, double fm,
               double fb, double whole, double tol, int depth) {
  const double m = (a + b) / 2;
  const double lm = (a + m) / 2, rm = (m + b) / 2;
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6 * (fm + 4 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15 * tol)
    return left + right + (left + right - whole) / 15;
  return simpson(f, a, m, fa, flm, fm, left, tol / 2, depth - 1) +
         simpson(f, m, b, fm, frm, fb, right, tol / 2, depth - 1);
}

double adaptive_integral(double (*f)(double), double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f((a + b) / 2);
  const double whole = (b - a) / 6 * (fa + 4 * fm + fb);
  return simpson(f, a, b, fa, fm, fb, whole, tol, 48);
}

double bump_normalization() {
  static const double z = adaptive_integral(&bump_raw, -1.0, 1.0, 1e-13);
  return z;
}

// integral of the normalized bump over [-1, t]
double bump_cdf(double t) {
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return adaptive_integral(&bump_raw, -1.0, t, 1e-13) / bump_normalization();
}

}  // namespace

EcdfSummary make_ecdf(std::vector<double> samples) {
  if (samples.empty()) throw std::invalid_argument("make_ecdf: empty sample set");
  std::sort(samples.begin(), samples.end());
  return {std::move(samples)};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double ks_distance_to_normal(const EcdfSummary& ecdf) {
  const int n = ecdf.n();
  double sup = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double phi = normal_cdf(ecdf.sorted_samples[i - 1]);
    sup = std::max(sup, phi - double(i - 1) / n);
    sup = std::max(sup, double(i) / n - phi);
  }
  return sup;
}

double two_sample_ks_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("two_sample_ks_statistic: empty sample set");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double sup = 0.0;
  size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    const double x = std::min(sa[i], sb[j]);
    while (i < sa.size() && sa[i] <= x) ++i;
    while (j < sb.size() && sb[j] <= x) ++j;
    sup = std::max(sup, std::abs(double(i) / sa.size() - double(j) / sb.size()));
  }
  return sup;
}

double two_sample_ks_threshold(std::size_t n_a, std::size_t n_b, double alpha) {
  if (alpha <= 0 || alpha >= 1)
    throw std::invalid_argument("two_sample_ks_threshold: alpha in (0,1) required");
  const double c = std::sqrt(-std::log(alpha / 2) / 2);
  return c * std::sqrt(double(n_a + n_b) / (double(n_a) * double(n_b)));
}

Mollifier::Mollifier(double set_boundary, double delta)
    : boundary_(set_boundary), delta_(delta) {
  if (delta <= 0) throw std::invalid_argument("Mollifier: delta must be positive");
  bump_normalization();  // touch the cached constant up front
}

double Mollifier::operator()(double x) const {
  // f(x) = integral over the delta-neighbourhood indicator against the
  // scaled bump: support check against the lower edge s0 = (x-b-delta)/delta
  const double s0 = (x - boundary_ - delta_) / delta_;
  return 1.0 - bump_cdf(s0);
}

Mollifier build_mollifier(double set_boundary, double delta) {
  return Mollifier(set_boundary, delta);
}

double smoothed_expectation_gap(std::span<const double> a,
                                std::span<const double> b, const Mollifier& f) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("smoothed_expectation_gap: empty sample set");
  double ma = 0.0, mb = 0.0;
  for (double v : a) ma += f(v);
  for (double v : b) mb += f(v);
  return std::abs(ma / a.size() - mb / b.size());
}

namespace {

// k-statistics from power sums of centered data; see the classical formulas
// k2 = s2/(n-1), k3 = n s3/((n-1)(n-2)),
// k4 = ((n^2+n) s4 - 3(n-1) s2^2)/((n-1)(n-2)(n-3))
// with s_r = sum (x - mean)^r.
std::array<double, 4> k_statistics(std::span<const double> x) {
  const double n = double(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double s2 = 0, s3 = 0, s4 = 0;
  for (double v : x) {
    const double d = v - mean;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  std::array<double, 4> k{};
  k[0] = mean;
  k[1] = s2 / (n - 1);
  k[2] = n * s3 / ((n - 1) * (n - 2));
  k[3] = ((n * n + n) * s4 - 3 * (n - 1) * s2 * s2) / ((n - 1) * (n - 2) * (n - 3));
  return k;
}

}  // namespace

CumulantEstimate estimate_cumulants(std::span<const double> samples) {
  const int n = static_cast<int>(samples.size());
  if (n < 1000)
    throw std::invalid_argument("estimate_cumulants: need at least 1000 samples");

  CumulantEstimate est;
  est.samples = n;
  est.k = k_statistics(samples);

  // delete-d jackknife over contiguous blocks; g blocks keep the cost at
  // O(g n) while behaving like the leave-one-out jackknife for smooth
  // statistics
  const int g = std::min(200, n / 5);
  std::vector<std::array<double, 4>> loo(g);
  std::vector<double> block;
  const size_t base = samples.size() / g;
  size_t start = 0;
  for (int b = 0; b < g; ++b) {
    const size_t len = base + (b < static_cast<int>(samples.size() % g) ? 1 : 0);
    block.clear();
    block.reserve(samples.size() - len);
    block.insert(block.end(), samples.begin(), samples.begin() + start);
    block.insert(block.end(), samples.begin() + start + len, samples.end());
    loo[b] = k_statistics(block);
    start += len;
  }
  for (int q = 0; q < 4; ++q) {
    double mean = 0.0;
    for (const auto& v : loo) mean += v[q];
    mean /= g;
    double ss = 0.0;
    for (const auto& v : loo) ss += (v[q] - mean) * (v[q] - mean);
    est.se[q] = std::sqrt(double(g - 1) / g * ss);
  }
  return est;
}

RateFit fit_rate(std::span<const std::pair<double, double>> points) {
  if (points.size() < 3)
    throw std::invalid_argument("fit_rate: need at least 3 points");
  std::vector<double> lx, ly;
  for (const auto& [x, y] : points) {
    if (x <= 0) throw std::invalid_argument("fit_rate: abscissa must be positive");
    if (y <= 0) throw std::invalid_argument("fit_rate: statistic must be positive");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double n = double(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_rate: abscissae are all equal");
  RateFit fit;
  fit.exponent = sxy / sxx;
  fit.intercept = my - fit.exponent * mx;
  double ss = 0.0;
  for (size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.exponent * lx[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

double multivariate_gaussian_distance(const JointOverlapMatrix& joint,
                                      int n_projections, std::uint64_t seed) {
  const int dim = joint.K * joint.m;
  if (dim < 1 || joint.rows.cols() != dim)
    throw std::invalid_argument("multivariate_gaussian_distance: malformed trial matrix");
  if (joint.rows.rows() < 100)
    throw std::invalid_argument("multivariate_gaussian_distance: need at least 100 trials");
  if (n_projections < 1)
    throw std::invalid_argument("multivariate_gaussian_distance: need n_projections >= 1");

  const int trials = static_cast<int>(joint.rows.rows());
  Engine rng = make_engine(split_seed(seed, seed_tag::kVector));
  std::normal_distribution<double> normal;

  double worst = 0.0;
  for (int p = 0; p < n_projections; ++p) {
    Eigen::VectorXd dir(dim);
    if (dim == 1) {
      dir(0) = 1.0;
    } else {
      for (int i = 0; i < dim; ++i) dir(i) = normal(rng);
      dir.normalize();
    }
    std::vector<double> projected(trials);
    for (int t = 0; t < trials; ++t) projected[t] = joint.rows.row(t).dot(dir);
    worst = std::max(worst, ks_distance_to_normal(make_ecdf(std::move(projected))));
    if (dim == 1) break;  // every axis projection is the same coordinate
  }
  return worst;
}

}  // namespace rrg
