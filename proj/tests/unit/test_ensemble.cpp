#include <doctest.h>

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "rrglab/ensemble.hpp"
#include "rrglab/experiment.hpp"
#include "rrglab/graph.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/spectral.hpp"

using namespace rrg;

namespace {

double spectral_moment2(const CenteredMatrix& m) {
  return m.matrix().squaredNorm() / m.dim();
}

double spectral_moment4(const CenteredMatrix& m) {
  return (m.matrix() * m.matrix()).squaredNorm() / m.dim();
}

struct MeanVar {
  double mean = 0, var = 0;
  int n = 0;
};

MeanVar mean_var(const std::vector<double>& v) {
  MeanVar out;
  out.n = static_cast<int>(v.size());
  for (double x : v) out.mean += x;
  out.mean /= out.n;
  for (double x : v) out.var += (x - out.mean) * (x - out.mean);
  out.var /= (out.n - 1);
  return out;
}

}  // namespace

TEST_CASE("K4 centered adjacency has eigenvalues {0, -1/sqrt2 x3}") {
  const RegularGraph k4 = sample_regular_graph(4, 3, 0);
  const CenteredMatrix h = build_centered_adjacency(k4);
  CHECK(h.maxAbsRowSum() <= 1e-12 * 4);
  const SpectralDecomposition sd = decompose(h);
  CHECK(std::abs(sd.eigenvalue(1)) <= 1e-12);
  for (int i = 2; i <= 4; ++i)
    CHECK(sd.eigenvalue(i) == doctest::Approx(-0.7071067811865476).epsilon(1e-12));
}

TEST_CASE("centered adjacency row sums vanish") {
  for (int n : {50, 200}) {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      const CenteredMatrix h =
          build_centered_adjacency(sample_regular_graph(n, 3, seed));
      CHECK(h.maxAbsRowSum() <= 1e-12 * n);
    }
  }
}

TEST_CASE("degree-2 input is rejected") {
  // a cycle is 2-regular; the regularity audit requires degree >= 3
  RegularGraph cycle;
  cycle.n_vertices = 6;
  cycle.degree = 2;
  for (int i = 0; i < 6; ++i)
    cycle.edges.emplace_back(std::min(i, (i + 1) % 6), std::max(i, (i + 1) % 6));
  std::sort(cycle.edges.begin(), cycle.edges.end());
  CHECK_FALSE(audit_regularity(cycle));
  CHECK_THROWS_AS(build_centered_adjacency(cycle), std::invalid_argument);
}

TEST_CASE("project_to_constraint") {
  const int n = 40;
  Engine rng = make_engine(5);
  std::normal_distribution<double> normal;

  SUBCASE("fixed point on the constrained space") {
    const CenteredMatrix w = sample_constrained_goe(n, 3);
    const CenteredMatrix again = project_to_constraint(w.matrix());
    CHECK((again.matrix() - w.matrix()).cwiseAbs().maxCoeff() <= 1e-14);
  }
  SUBCASE("rank-one all-ones goes to zero") {
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(n, n);
    const CenteredMatrix z = project_to_constraint(ones);
    CHECK(z.matrix().cwiseAbs().maxCoeff() <= 1e-13);
  }
  SUBCASE("random symmetric input lands in the constraint space") {
    Eigen::MatrixXd m(n, n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i <= j; ++i) m(i, j) = m(j, i) = normal(rng);
    const CenteredMatrix p = project_to_constraint(m);
    CHECK(p.maxAbsRowSum() <= 1e-12 * n);
  }
  SUBCASE("non-symmetric input is rejected") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    m(0, 1) = 1.0;
    CHECK_THROWS_AS(project_to_constraint(m), std::invalid_argument);
  }
}

TEST_CASE("constrained ensemble covariance matches the closed form") {
  // Monte Carlo second-moment tensor against the exact projected covariance
  const int n = 120;
  const int samples = 30000;
  const std::vector<std::array<int, 4>> tuples = {
      {0, 1, 0, 1}, {0, 1, 0, 2}, {0, 1, 2, 3}, {0, 0, 0, 0}, {0, 0, 1, 1}, {0, 0, 0, 1}};
  std::vector<std::vector<double>> products(tuples.size());
  for (int s = 0; s < samples; ++s) {
    const CenteredMatrix w = sample_constrained_goe(n, mix64(1000 + s));
    for (size_t t = 0; t < tuples.size(); ++t) {
      const auto& [i, j, k, l] = tuples[t];
      products[t].push_back(w.matrix()(i, j) * w.matrix()(k, l));
    }
  }
  for (size_t t = 0; t < tuples.size(); ++t) {
    const auto& [i, j, k, l] = tuples[t];
    const MeanVar mv = mean_var(products[t]);
    const double se = std::sqrt(mv.var / mv.n);
    const double expected = constrained_goe_covariance(n, i, j, k, l);
    INFO("tuple " << i << j << k << l << ": " << mv.mean << " vs " << expected);
    CHECK(std::abs(mv.mean - expected) <= 4 * se);
  }
}

TEST_CASE("constrained ensemble variance spot check at n=1000") {
  const int n = 1000;
  const int samples = 20000;
  std::vector<double> products;
  products.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    const CenteredMatrix w = sample_constrained_goe(n, mix64(77000 + s));
    products.push_back(w.matrix()(0, 1) * w.matrix()(0, 1));
  }
  const MeanVar mv = mean_var(products);
  const double se = std::sqrt(mv.var / mv.n);
  // (1/n)(1 - 2/n + 2/n^2), the closed form at (i,j,k,l) = (1,2,1,2)
  const double expected = constrained_goe_covariance(n, 0, 1, 0, 1);
  CHECK(std::abs(mv.mean - expected) <= 4 * se);
  CHECK(sample_constrained_goe(n, 1).maxAbsRowSum() <= 1e-12 * n);
}

TEST_CASE("exact evolution: coefficients and t=0 identity") {
  const RegularGraph g = sample_regular_graph(100, 3, 11);
  const CenteredMatrix h0 = build_centered_adjacency(g);

  SUBCASE("t = 0 returns the input bit for bit") {
    const CenteredMatrix same = evolve_exact(h0, 0.0, 5);
    CHECK((same.matrix() - h0.matrix()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("negative time is rejected") {
    CHECK_THROWS_AS(evolve_exact(h0, -0.1, 5), std::invalid_argument);
  }
  SUBCASE("decomposition identity against an independent ensemble draw") {
    const double t = 0.37;
    const CenteredMatrix evolved = evolve_exact(h0, t, 5);
    const CenteredMatrix w = sample_constrained_goe(100, 5);
    const Eigen::MatrixXd expected =
        std::exp(-t / 2) * h0.matrix() + std::sqrt(1 - std::exp(-t)) * w.matrix();
    CHECK((evolved.matrix() - expected).cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("critical-time coefficients at N=1000, epsilon=0.1") {
    const double t_star = critical_time(1000, 0.1);
    CHECK(t_star == doctest::Approx(0.199526231496888).epsilon(1e-9));
    CHECK(std::exp(-t_star / 2) == doctest::Approx(0.905051785159606).epsilon(1e-9));
    CHECK(std::sqrt(1 - std::exp(-t_star)) ==
          doctest::Approx(0.425301382762165).epsilon(1e-9));
  }
}

TEST_CASE("long-time evolution matches the stationary ensemble") {
  const int n = 150;
  const int trials = 300;
  std::vector<double> m2_evolved, m2_goe, m4_evolved, m4_goe;
  const CenteredMatrix h0 = build_centered_adjacency(sample_regular_graph(n, 3, 20));
  for (int s = 0; s < trials; ++s) {
    const CenteredMatrix ht = evolve_exact(h0, 50.0, mix64(100 + s));
    const CenteredMatrix w = sample_constrained_goe(n, mix64(90000 + s));
    m2_evolved.push_back(spectral_moment2(ht));
    m2_goe.push_back(spectral_moment2(w));
    m4_evolved.push_back(spectral_moment4(ht));
    m4_goe.push_back(spectral_moment4(w));
  }
  const auto close = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const MeanVar ma = mean_var(a), mb = mean_var(b);
    const double se = std::sqrt(ma.var / ma.n + mb.var / mb.n);
    return std::abs(ma.mean - mb.mean) <= 4 * se;
  };
  CHECK(close(m2_evolved, m2_goe));
  CHECK(close(m4_evolved, m4_goe));
}

TEST_CASE("semigroup property of the exact evolution") {
  const int n = 150;
  const int trials = 400;
  const double s = 0.12, t = 0.23;
  const CenteredMatrix h0 = build_centered_adjacency(sample_regular_graph(n, 3, 21));
  std::vector<double> two_leg_m2, one_leg_m2, two_leg_m4, one_leg_m4;
  for (int trial = 0; trial < trials; ++trial) {
    const CenteredMatrix mid = evolve_exact(h0, s, mix64(5000 + trial));
    const CenteredMatrix two = evolve_exact(mid, t, mix64(6000 + trial));
    const CenteredMatrix one = evolve_exact(h0, s + t, mix64(7000 + trial));
    two_leg_m2.push_back(spectral_moment2(two));
    one_leg_m2.push_back(spectral_moment2(one));
    two_leg_m4.push_back(spectral_moment4(two));
    one_leg_m4.push_back(spectral_moment4(one));
  }
  const auto close = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const MeanVar ma = mean_var(a), mb = mean_var(b);
    const double se = std::sqrt(ma.var / ma.n + mb.var / mb.n);
    return std::abs(ma.mean - mb.mean) <= 4 * se;
  };
  CHECK(close(two_leg_m2, one_leg_m2));
  CHECK(close(two_leg_m4, one_leg_m4));
}

TEST_CASE("pathwise integrator") {
  const int n = 100;
  const CenteredMatrix h0 = build_centered_adjacency(sample_regular_graph(n, 3, 30));

  SUBCASE("argument validation") {
    CHECK_THROWS_AS(evolve_path(h0, -1.0, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(evolve_path(h0, 1.0, 0, 1), std::invalid_argument);
  }
  SUBCASE("single small step stays near the start") {
    const double t = 1e-6;
    const CdbmPath path = evolve_path(h0, t, 1, 2);
    REQUIRE(path.states.size() == 2);
    const double dist = (path.states[1].matrix() - h0.matrix()).norm();
    CHECK(dist <= 3 * std::sqrt(t * n));
  }
  SUBCASE("every stored state satisfies the constraint") {
    const CdbmPath path = evolve_path(h0, 0.2, 40, 3, 4);
    CHECK(path.states.size() == 11);
    CHECK(path.times.front() == 0.0);
    for (const auto& state : path.states)
      CHECK(state.maxAbsRowSum() <= 1e-10 * n);
  }
  SUBCASE("weak error shrinks with the step count") {
    // closed-form second-moment target:
    //   E m2(t) = e^{-t} m2(0) + (1 - e^{-t}) (n-1)/n
    const double t = 0.2;
    const int trials = 1200;
    const double target = std::exp(-t) * spectral_moment2(h0) +
                          (1 - std::exp(-t)) * double(n - 1) / n;
    std::vector<double> bias;
    for (int steps : {5, 20, 80}) {
      double mean = 0;
      for (int trial = 0; trial < trials; ++trial)
        mean += spectral_moment2(
                    evolve_path(h0, t, steps, mix64(steps * 10000 + trial), steps)
                        .states.back()) /
                trials;
      bias.push_back(std::abs(mean - target));
    }
    CHECK(bias[0] > bias[1]);
    CHECK(bias[1] > bias[2] * 0.5);  // noise floor tolerance on the finest level
    CHECK(bias[0] >= 2.5 * bias[2]);
    CHECK(bias[2] <= 2e-3);
  }
}

TEST_CASE("operator norm of evolved graph matrices stays below 2.5") {
  const int n = 500;
  for (std::uint64_t seed : {1ull, 2ull}) {
    const CenteredMatrix h0 =
        build_centered_adjacency(sample_regular_graph(n, 3, seed));
    for (double t : {0.0, critical_time(n, 0.1), 1.0}) {
      const CenteredMatrix m =
          t == 0.0 ? h0 : evolve_exact(h0, t, split_seed(seed, 99));
      const Eigen::VectorXd values = nonconstraint_eigenvalues(m);
      const double op_norm =
          std::max(std::abs(values(0)), std::abs(values(values.size() - 1)));
      CHECK(op_norm <= 2.5);
    }
  }
}
