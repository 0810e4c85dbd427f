#include "rrglab/overlaps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "rrglab/rng.hpp"

namespace rrg {

namespace {

constexpr double kUnitTol = 1e-12;

// distinct vertex sample of the given size
std::vector<int> sample_vertex_set(int n, int size, Engine& rng) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  for (int i = 0; i < size; ++i) {
    std::uniform_int_distribution<int> pick(i, n - 1);
    std::swap(all[i], all[pick(rng)]);
  }
  all.resize(size);
  return all;
}

int indicator_set_size(int n) {
  return static_cast<int>(std::floor(std::pow(double(n), 0.75)));
}

// Jackknife standard error of a plug-in mean of f(x).
double mean_se(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n < 2) return 0.0;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (double(n) * (n - 1)));
}

}  // namespace

TestVector make_test_vector(TestVectorKind kind, int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("make_test_vector: need n >= 2");
  TestVector out;
  out.kind = kind;
  Engine rng = make_engine(split_seed(seed, seed_tag::kVector));
  switch (kind) {
    case TestVectorKind::kCoordinateDifference: {
      out.coords = Eigen::VectorXd::Zero(n);
      out.coords(0) = 1.0 / std::sqrt(2.0);
      out.coords(1) = -1.0 / std::sqrt(2.0);
      out.id = "coordinate-difference";
      break;
    }
    case TestVectorKind::kRandomOrthogonal: {
      std::normal_distribution<double> normal;
      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = normal(rng);
      v.array() -= v.mean();
      v.normalize();
      out.coords = v;
      out.id = "random-orthogonal-" + std::to_string(seed);
      break;
    }
    case TestVectorKind::kIndicatorSet: {
      const int size = indicator_set_size(n);
      const auto set = sample_vertex_set(n, size, rng);
      Eigen::VectorXd v = Eigen::VectorXd::Constant(n, -double(size) / n);
      for (int s : set) v(s) += 1.0;
      v.normalize();
      out.coords = v;
      out.id = "indicator-set-" + std::to_string(seed);
      break;
    }
  }
  return out;
}

std::vector<double> signed_overlaps(const Eigen::MatrixXd& vectors,
                                    const Eigen::VectorXd& q,
                                    std::uint64_t sign_seed) {
  Engine rng = make_engine(split_seed(sign_seed, seed_tag::kSigns));
  std::uniform_int_distribution<int> coin(0, 1);
  const double root_n = std::sqrt(double(q.size()));
  std::vector<double> out(vectors.cols());
  for (int c = 0; c < vectors.cols(); ++c) {
    const double sign = coin(rng) ? 1.0 : -1.0;
    out[c] = sign * root_n * vectors.col(c).dot(q);
  }
  return out;
}

OverlapSample compute_overlaps(const SpectralDecomposition& sd,
                               const TestVector& q, std::span<const int> indices,
                               std::uint64_t sign_seed) {
  const int n = sd.dim();
  if (q.coords.size() != n)
    throw std::invalid_argument("compute_overlaps: dimension mismatch");
  if (std::abs(q.coords.norm() - 1.0) > kUnitTol)
    throw std::invalid_argument("compute_overlaps: q must be a unit vector");
  if (std::abs(q.coords.sum()) > kUnitTol * std::sqrt(double(n)))
    throw std::invalid_argument("compute_overlaps: q must be orthogonal to e");

  OverlapSample out;
  out.test_vector_id = q.id;
  out.seed = sign_seed;
  out.indices.assign(indices.begin(), indices.end());
  out.values.resize(indices.size());

  Engine rng = make_engine(split_seed(sign_seed, seed_tag::kSigns));
  std::uniform_int_distribution<int> coin(0, 1);
  const double root_n = std::sqrt(double(n));
  for (size_t k = 0; k < indices.size(); ++k) {
    const int idx = indices[k];
    if (idx < 1 || idx > n)
      throw std::out_of_range("compute_overlaps: spectral index out of range");
    if (idx == 1) out.index1_flagged = true;
    const double sign = coin(rng) ? 1.0 : -1.0;
    out.values[k] = sign * root_n * sd.eigenvector(idx).dot(q.coords);
  }
  return out;
}

namespace {

std::vector<double> collect_index(std::span<const OverlapSample> samples, int index) {
  std::vector<double> x;
  x.reserve(samples.size());
  for (const auto& s : samples) {
    const auto it = std::find(s.indices.begin(), s.indices.end(), index);
    if (it == s.indices.end())
      throw std::invalid_argument("overlap estimator: index missing from a sample");
    x.push_back(s.values[it - s.indices.begin()]);
  }
  return x;
}

}  // namespace

MomentEstimate estimate_moments_from_values(std::span<const double> x) {
  if (x.size() < 100)
    throw std::invalid_argument("estimate_moments: need at least 100 trials");
  MomentEstimate est;
  est.trials = static_cast<int>(x.size());
  std::vector<double> x2(x.size()), x4(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    x2[i] = x[i] * x[i];
    x4[i] = x2[i] * x2[i];
  }
  const auto mean = [](std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  };
  est.mean = mean(x);
  est.second = mean(x2);
  est.fourth = mean(x4);
  est.mean_se = mean_se(x);
  est.second_se = mean_se(x2);
  est.fourth_se = mean_se(x4);
  return est;
}

MomentEstimate estimate_moments(std::span<const OverlapSample> samples, int index) {
  const auto x = collect_index(samples, index);
  return estimate_moments_from_values(x);
}

CorrelationEstimate estimate_decorrelation_from_values(std::span<const double> xi,
                                                       std::span<const double> xj) {
  if (xi.size() != xj.size())
    throw std::invalid_argument("estimate_decorrelation: trial count mismatch");
  if (xi.size() < 100)
    throw std::invalid_argument("estimate_decorrelation: need at least 100 trials");
  std::vector<double> prod(xi.size());
  for (size_t k = 0; k < xi.size(); ++k) prod[k] = xi[k] * xj[k];
  CorrelationEstimate est;
  est.trials = static_cast<int>(xi.size());
  est.value = std::accumulate(prod.begin(), prod.end(), 0.0) / prod.size();
  est.std_error = mean_se(prod);
  return est;
}

CorrelationEstimate estimate_decorrelation(std::span<const OverlapSample> samples,
                                           int i, int j) {
  if (i == j)
    throw std::invalid_argument("estimate_decorrelation: i == j, use estimate_moments");
  if (i < 2 || j < 2)
    throw std::invalid_argument("estimate_decorrelation: indices must be >= 2");
  const auto xi = collect_index(samples, i);
  const auto xj = collect_index(samples, j);
  return estimate_decorrelation_from_values(xi, xj);
}

JointCovariance joint_covariance(const JointOverlapMatrix& joint) {
  const int dim = joint.K * joint.m;
  if (dim < 1 || joint.rows.cols() != dim)
    throw std::invalid_argument("joint_covariance: malformed trial matrix");
  const int trials = static_cast<int>(joint.rows.rows());
  if (trials < 10 * dim)
    throw std::invalid_argument("joint_covariance: need at least 10*m*K trials");

  JointCovariance out;
  out.covariance = (joint.rows.transpose() * joint.rows) / double(trials);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.covariance);
  const auto& ev = es.eigenvalues();
  out.deviation_from_identity =
      (ev.array() - 1.0).abs().maxCoeff();
  out.rank_deficient = ev.minCoeff() < 1e-12;
  return out;
}

double mass_deviation(const Eigen::VectorXd& u, std::span<const int> set) {
  double mass = 0.0;
  for (int v : set) {
    if (v < 0 || v >= u.size())
      throw std::out_of_range("mass_deviation: vertex outside range");
    mass += u(v) * u(v);
  }
  return std::abs(mass - double(set.size()) / double(u.size()));
}

DelocalizationStats delocalization_from_vector(const Eigen::VectorXd& u2,
                                               std::uint64_t set_seed) {
  DelocalizationStats out;
  out.sup_norm = u2.cwiseAbs().maxCoeff();
  Engine rng = make_engine(split_seed(set_seed, seed_tag::kSet));
  const int n = static_cast<int>(u2.size());
  const auto set = sample_vertex_set(n, indicator_set_size(n), rng);
  out.mass_deviation = mass_deviation(u2, set);
  return out;
}

DelocalizationStats delocalization_stats(const SpectralDecomposition& sd,
                                         std::uint64_t set_seed) {
  return delocalization_from_vector(sd.eigenvector(2), set_seed);
}

OverlapSdeResult simulate_overlap_sde(const Eigen::VectorXd& overlaps,
                                      const Eigen::VectorXd& eigenvalues,
                                      double t_max, int n_steps,
                                      std::uint64_t seed,
                                      const OverlapSdeOptions& options) {
  const int m = static_cast<int>(eigenvalues.size());
  if (overlaps.size() != m)
    throw std::invalid_argument("simulate_overlap_sde: overlap/eigenvalue size mismatch");
  if (m < 2) throw std::invalid_argument("simulate_overlap_sde: need at least 2 levels");
  if (t_max <= 0 || n_steps < 1)
    throw std::invalid_argument("simulate_overlap_sde: need t_max > 0 and n_steps >= 1");

  constexpr double kDegenerateGap = 1e-12;
  // an angle this wide mixes the pair plane uniformly; also keeps the
  // rotation finite for vanishing gaps
  constexpr double kMaxAngleSd = 32.0;
  constexpr int kMaxSub = 64;

  const double n = double(m + 1);  // matrix dimension behind the spectrum
  const double dt = t_max / n_steps;

  const auto min_gap = [&](const Eigen::VectorXd& lam) {
    double g = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < m; ++i) g = std::min(g, lam(i) - lam(i + 1));
    return g;
  };

  Eigen::VectorXd lam = eigenvalues;
  Eigen::VectorXd x = overlaps;
  if (min_gap(lam) <= kDegenerateGap)
    throw std::invalid_argument(
        "simulate_overlap_sde: initial spectrum degenerate (gap below 1e-12)");

  Engine rng = make_engine(split_seed(seed, seed_tag::kSde));
  std::normal_distribution<double> normal;

  OverlapSdeResult result;
  result.min_gap_seen = min_gap(lam);
  const int stride = options.store_stride > 0 ? options.store_stride : n_steps;
  result.times.push_back(0.0);
  result.overlaps.push_back(x);

  // crossings relabel the gas: resort eigenvalues and carry the overlaps
  std::vector<int> order(m);
  const auto resort = [&]() {
    bool sorted = true;
    for (int i = 0; i + 1 < m; ++i)
      if (lam(i) < lam(i + 1)) {
        sorted = false;
        break;
      }
    if (sorted) return;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return lam(a) > lam(b); });
    Eigen::VectorXd lam2(m), x2(m);
    for (int i = 0; i < m; ++i) {
      lam2(i) = lam(order[i]);
      x2(i) = x(order[i]);
    }
    lam = std::move(lam2);
    x = std::move(x2);
  };

  Eigen::VectorXd drift(m);
  for (int step = 1; step <= n_steps; ++step) {
    // pairwise rotations on the overlaps
    if (options.with_noise) {
      const double root = std::sqrt(dt / n);
      for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
          const double gap = lam(i) - lam(j);
          const double sd = std::min(root / std::abs(gap), kMaxAngleSd);
          const double phi = normal(rng) * sd;
          double c, s;
          if (std::abs(phi) < 0.01) {  // series rotation, norm error < 2e-14
            const double p2 = phi * phi;
            c = 1.0 - p2 / 2 + p2 * p2 / 24;
            s = phi * (1.0 - p2 / 6);
          } else {
            c = std::cos(phi);
            s = std::sin(phi);
          }
          const double xi = x(i), xj = x(j);
          x(i) = c * xi + s * xj;
          x(j) = -s * xi + c * xj;
        }
      }
    } else {
      // drift-only variant: just the quadratic-variation compensator
      for (int i = 0; i < m; ++i) {
        double gap_sum = 0.0;
        for (int j = 0; j < m; ++j) {
          if (j == i) continue;
          const double gap = lam(i) - lam(j);
          gap_sum += 1.0 / (gap * gap);
        }
        drift(i) = -0.5 * gap_sum / n * x(i);
      }
      x += dt * drift;
    }

    // eigenvalue flow, substepped against the current minimal gap
    if (options.evolve_eigenvalues) {
      const double g = min_gap(lam);
      int n_sub = 1;
      if (std::isfinite(g) && g > 0) {
        const double dt_stable = n * g * g / 128.0;
        n_sub = std::clamp(int(std::ceil(dt / dt_stable)), 1, kMaxSub);
      }
      const double dts = dt / n_sub;
      const double decay = std::exp(-dts / 2);
      const double noise = std::sqrt((1.0 - std::exp(-dts)) * 2.0 / n);
      // overshoot guard for the Euler repulsion at deep gap excursions
      const double max_move = 6.0 * std::sqrt(2.0 * dts / n);
      for (int sub = 0; sub < n_sub; ++sub) {
        for (int i = 0; i < m; ++i) {
          double rep = 0.0;
          for (int j = 0; j < m; ++j) {
            if (j == i) continue;
            rep += 1.0 / (lam(i) - lam(j));
          }
          drift(i) = std::clamp(rep / n * dts, -max_move, max_move);
        }
        for (int i = 0; i < m; ++i)
          lam(i) = decay * lam(i) + drift(i) + noise * normal(rng);
        resort();
        const double gs = min_gap(lam);
        result.min_gap_seen = std::min(result.min_gap_seen, gs);
        if (gs <= kDegenerateGap) {
          result.aborted = true;
          result.aborted_step = step;
          result.final_eigenvalues = lam;
          return result;
        }
      }
    }

    if (step % stride == 0 || step == n_steps) {
      result.times.push_back(step * dt);
      result.overlaps.push_back(x);
    }
  }
  result.final_eigenvalues = lam;
  return result;
}

}  // namespace rrg
