#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "rrglab/metrics.hpp"
#include "rrglab/rng.hpp"

using namespace rrg;

namespace {

// independent Phi(-8) oracle: Mills-ratio asymptotic series in long double
long double phi_minus8_oracle() {
  const long double x = 8.0L;
  long double s = 1.0L, term = 1.0L;
  for (int k = 1; k <= 12; ++k) {
    term *= -(2.0L * k - 1) / (x * x);
    s += term;
  }
  return expl(-x * x / 2) / sqrtl(2 * M_PIl) / x * s;
}

std::vector<double> gaussian_draws(int n, std::uint64_t seed) {
  Engine rng = make_engine(seed);
  std::normal_distribution<double> normal;
  std::vector<double> x(n);
  for (auto& v : x) v = normal(rng);
  return x;
}

}  // namespace

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  const double oracle = static_cast<double>(phi_minus8_oracle());
  CHECK(std::abs(normal_cdf(-8.0) - oracle) <= 1e-12);
  CHECK(std::abs(normal_cdf(-8.0) - oracle) <= 1e-6 * oracle);
  CHECK(std::abs(normal_cdf(8.0) - 1.0) <= 1e-12);
  double prev = -1;
  for (int k = 0; k <= 10000; ++k) {
    const double x = -10.0 + 20.0 * k / 10000;
    const double p = normal_cdf(x);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("Kolmogorov distance to the standard normal") {
  SUBCASE("single sample at zero") {
    CHECK(ks_distance_to_normal(make_ecdf({0.0})) == doctest::Approx(0.5));
  }
  SUBCASE("two-point sample, hand computed") {
    const double d = ks_distance_to_normal(make_ecdf({-1.0, 1.0}));
    CHECK(d == doctest::Approx(normal_cdf(1.0) - 0.5).epsilon(1e-12));
  }
  SUBCASE("DKW calibration on exact normal draws") {
    const auto x = gaussian_draws(100000, 41);
    CHECK(ks_distance_to_normal(make_ecdf(x)) <= 0.0062);
  }
  SUBCASE("jump-point formula matches a brute-force scan") {
    Engine rng = make_engine(42);
    std::uniform_int_distribution<int> size_dist(1, 400);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
      const int n = size_dist(rng);
      const double mu = shift(rng);
      const double sigma = 0.5 + std::abs(shift(rng));
      std::vector<double> x(n);
      for (auto& v : x) v = mu + sigma * normal(rng);
      const EcdfSummary ecdf = make_ecdf(x);
      const double fast = ks_distance_to_normal(ecdf);
      // scan a dense grid plus both one-sided limits at every jump
      double brute = 0;
      const auto f_n = [&](double t) {
        return double(std::upper_bound(ecdf.sorted_samples.begin(),
                                       ecdf.sorted_samples.end(), t) -
                      ecdf.sorted_samples.begin()) /
               n;
      };
      const double lo = ecdf.sorted_samples.front() - 1.0;
      const double hi = ecdf.sorted_samples.back() + 1.0;
      const int grid = 10000;  // dense scan; jump evaluations carry the sup
      for (int k = 0; k <= grid; ++k) {
        const double t = lo + (hi - lo) * k / grid;
        brute = std::max(brute, std::abs(f_n(t) - normal_cdf(t)));
      }
      for (double t : ecdf.sorted_samples) {
        brute = std::max(brute, std::abs(f_n(t) - normal_cdf(t)));
        brute = std::max(brute,
                         std::abs(f_n(t - 1e-13 * std::max(1.0, std::abs(t))) -
                                  normal_cdf(t)));
      }
      CHECK(std::abs(fast - brute) <= 1e-9);
    }
  }
}

TEST_CASE("two-sample Kolmogorov statistic") {
  SUBCASE("identical and disjoint samples") {
    const std::vector<double> a = {1, 2, 3, 4};
    CHECK(two_sample_ks_statistic(a, a) == 0.0);
    const std::vector<double> b = {10, 11, 12};
    CHECK(two_sample_ks_statistic(a, b) == 1.0);
  }
  SUBCASE("null calibration at the 1% level") {
    const auto a = gaussian_draws(2000, 43);
    const auto b = gaussian_draws(2000, 44);
    CHECK(two_sample_ks_statistic(a, b) < two_sample_ks_threshold(2000, 2000, 0.01));
  }
}

TEST_CASE("mollifier") {
  SUBCASE("sandwich between the indicator and its widened copy") {
    const double b = 0.4, delta = 0.07;
    const Mollifier f = build_mollifier(b, delta);
    for (int k = 0; k <= 2000; ++k) {
      const double x = b - 4 * delta + 8 * delta * k / 2000;
      const double v = f(x);
      CHECK(v >= -1e-12);
      CHECK(v <= 1 + 1e-12);
      if (x <= b) CHECK(v >= 1 - 1e-10);          // 1_A <= f
      if (x >= b + 2 * delta) CHECK(v <= 1e-10);  // f <= 1_{A_{2delta}}
    }
    CHECK(f(b - 3 * delta) == doctest::Approx(1.0));
    CHECK(f(b + 3 * delta) == doctest::Approx(0.0));
  }
  SUBCASE("width choice n^{-5/36}") {
    CHECK(std::pow(1e6, -5.0 / 36.0) == doctest::Approx(0.146779926762207).epsilon(1e-9));
  }
  SUBCASE("fifth derivative obeys the delta^-5 bound") {
    // C5 frozen from a finite-difference scan across deltas; the product
    // max|f^(5)| delta^5 is delta-independent at 1.73e4
    const double kC5 = 20000.0;
    for (double delta : {0.05, 0.1}) {
      const Mollifier f = build_mollifier(0.0, delta);
      const double h = delta / 200;
      double worst = 0;
      for (double u = -0.1 * delta; u <= 2.1 * delta; u += delta / 100) {
        const double d5 =
            (-f(u - 3 * h) + 4 * f(u - 2 * h) - 5 * f(u - h) + 5 * f(u + h) -
             4 * f(u + 2 * h) + f(u + 3 * h)) /
            (2 * std::pow(h, 5));
        worst = std::max(worst, std::abs(d5));
      }
      CHECK(worst <= kC5 * std::pow(delta, -5.0));
      CHECK(worst >= 0.5 * kC5 * std::pow(delta, -5.0));  // bound is tight
    }
  }
  SUBCASE("rejects non-positive width") {
    CHECK_THROWS_AS(build_mollifier(0.0, 0.0), std::invalid_argument);
  }
}

TEST_CASE("smoothed expectation gap") {
  SUBCASE("identical samples give zero") {
    const auto x = gaussian_draws(1000, 45);
    const Mollifier f = build_mollifier(0.0, 0.1);
    CHECK(smoothed_expectation_gap(x, x, f) == 0.0);
  }
  SUBCASE("gaussian shift comparison") {
    const int n = 100000;
    const double delta = 0.1;
    auto a = gaussian_draws(n, 46);
    auto b = gaussian_draws(n, 47);
    for (auto& v : b) v += 0.5;
    const Mollifier f = build_mollifier(0.0, delta);
    const double gap = smoothed_expectation_gap(a, b, f);
    const double target = normal_cdf(0.0) - normal_cdf(-0.5);
    // 3 binomial-scale standard errors plus the smoothing bias budget O(delta)
    const double tol = 3 * std::sqrt(0.25 / n) * std::sqrt(2.0) + 0.1 * delta;
    CHECK(std::abs(gap - target) <= tol);
  }
}

TEST_CASE("cumulant estimators") {
  SUBCASE("too few samples rejected") {
    std::vector<double> x(999, 1.0);
    CHECK_THROWS_AS(estimate_cumulants(x), std::invalid_argument);
  }
  SUBCASE("constant input has vanishing higher cumulants") {
    std::vector<double> x(2000, 3.25);
    const CumulantEstimate est = estimate_cumulants(x);
    CHECK(est.k[0] == doctest::Approx(3.25));
    CHECK(est.k[1] == doctest::Approx(0.0));
    CHECK(est.k[2] == doctest::Approx(0.0));
    CHECK(est.k[3] == doctest::Approx(0.0));
  }
  SUBCASE("calibration on closed-form families") {
    const int n = 100000;
    Engine rng = make_engine(48);

    std::vector<double> gauss(n), unif(n), expo(n);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::exponential_distribution<double> exponential(1.0);
    for (int i = 0; i < n; ++i) {
      gauss[i] = normal(rng);
      unif[i] = uniform(rng);
      expo[i] = exponential(rng);
    }
    const auto check4 = [&](const std::vector<double>& x,
                            std::array<double, 4> truth) {
      const CumulantEstimate est = estimate_cumulants(x);
      for (int q = 0; q < 4; ++q) {
        INFO("order " << q + 1 << ": " << est.k[q] << " vs " << truth[q]
                      << " (se " << est.se[q] << ")");
        CHECK(std::abs(est.k[q] - truth[q]) <= 4 * est.se[q]);
      }
    };
    check4(gauss, {0.0, 1.0, 0.0, 0.0});
    check4(unif, {0.5, 1.0 / 12, 0.0, -1.0 / 120});
    check4(expo, {1.0, 1.0, 2.0, 6.0});
  }
}

TEST_CASE("rate fitting") {
  SUBCASE("noiseless power laws are recovered exactly") {
    for (double exponent : {-2.0, -1.0, -1.0 / 6.0, -0.01}) {
      std::vector<std::pair<double, double>> pts;
      for (double n : {500.0, 1000.0, 2000.0, 4000.0})
        pts.emplace_back(n, 7.0 * std::pow(n, exponent));
      const RateFit fit = fit_rate(pts);
      CHECK(std::abs(fit.exponent - exponent) <= 1e-10);
      CHECK(std::abs(fit.intercept - std::log(7.0)) <= 1e-10);
      CHECK(fit.residual <= 1e-12);
    }
  }
  SUBCASE("constant data fits exponent zero") {
    std::vector<std::pair<double, double>> pts = {{100, 2.5}, {200, 2.5}, {400, 2.5}};
    CHECK(fit_rate(pts).exponent == doctest::Approx(0.0));
  }
  SUBCASE("rejects unusable inputs") {
    std::vector<std::pair<double, double>> two = {{100, 1.0}, {200, 0.5}};
    CHECK_THROWS_AS(fit_rate(two), std::invalid_argument);
    std::vector<std::pair<double, double>> bad = {{100, 1.0}, {200, 0.5}, {400, 0.0}};
    CHECK_THROWS_AS(fit_rate(bad), std::invalid_argument);
  }
}

TEST_CASE("projection proxy for multivariate gaussianity") {
  Engine rng = make_engine(49);
  std::normal_distribution<double> normal;
  SUBCASE("iid gaussian rows stay small") {
    JointOverlapMatrix joint;
    joint.K = 4;
    joint.m = 1;
    joint.rows.resize(10000, 4);
    for (int r = 0; r < joint.rows.rows(); ++r)
      for (int c = 0; c < 4; ++c) joint.rows(r, c) = normal(rng);
    CHECK(multivariate_gaussian_distance(joint, 50, 7) <= 0.03);
  }
  SUBCASE("perfect correlation is detected") {
    JointOverlapMatrix joint;
    joint.K = 2;
    joint.m = 1;
    joint.rows.resize(10000, 2);
    for (int r = 0; r < joint.rows.rows(); ++r) {
      const double v = normal(rng);
      joint.rows(r, 0) = v;
      joint.rows(r, 1) = v;
    }
    CHECK(multivariate_gaussian_distance(joint, 50, 7) >= 0.1);
  }
  SUBCASE("single coordinate reduces to the one-dimensional distance") {
    JointOverlapMatrix joint;
    joint.K = 1;
    joint.m = 1;
    joint.rows.resize(500, 1);
    std::vector<double> x(500);
    for (int r = 0; r < 500; ++r) {
      x[r] = normal(rng);
      joint.rows(r, 0) = x[r];
    }
    CHECK(multivariate_gaussian_distance(joint, 50, 7) ==
          doctest::Approx(ks_distance_to_normal(make_ecdf(x))).epsilon(1e-15));
  }
}
