#include "rrglab/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include "rrglab/rng.hpp"

namespace rrg {

namespace {

// Mirror the upper triangle into the lower one so symmetry holds bit for bit.
void mirror_upper(Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i) m(j, i) = m(i, j);
}

// G with independent upper-triangle entries: off-diagonal N(0, 1/n),
// diagonal N(0, 2/n).
Eigen::MatrixXd sample_goe(int n, Engine& rng) {
  std::normal_distribution<double> normal;
  const double off = 1.0 / std::sqrt(static_cast<double>(n));
  const double diag = std::sqrt(2.0 / n);
  Eigen::MatrixXd g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) g(i, j) = off * normal(rng);
    g(j, j) = diag * normal(rng);
  }
  mirror_upper(g);
  return g;
}

// P M P in O(n^2) through rank-one corrections:
//   P M P = M - (r e^T + e r^T)/n + (s/n^2) e e^T,  r = M e, s = e^T M e.
void project_in_place(Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  const Eigen::VectorXd r = m.rowwise().sum();
  const double s = r.sum();
  const double sn2 = s / (static_cast<double>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i <= j; ++i)
      m(i, j) -= (r(i) + r(j)) / n - sn2;
  mirror_upper(m);
}

}  // namespace

CenteredMatrix CenteredMatrix::fromSymmetric(Eigen::MatrixXd m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("CenteredMatrix: matrix must be square");
  const int n = static_cast<int>(m.rows());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < j; ++i)
      if (m(i, j) != m(j, i))
        throw std::invalid_argument("CenteredMatrix: matrix not exactly symmetric");
  CenteredMatrix out(std::move(m));
  if (out.maxAbsRowSum() > kRowSumTol * n)
    throw std::invalid_argument("CenteredMatrix: row sums exceed the kernel tolerance");
  return out;
}

CenteredMatrix build_centered_adjacency(const RegularGraph& g) {
  if (!audit_regularity(g))
    throw std::invalid_argument("build_centered_adjacency: graph fails the regularity audit");
  const int n = g.n_vertices;
  const double scale = 1.0 / std::sqrt(static_cast<double>(g.degree - 1));
  const double shift = g.degree * scale / n;
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, -shift);
  for (const auto& [u, v] : g.edges) {
    m(u, v) += scale;
    m(v, u) += scale;
  }
  return CenteredMatrix::fromSymmetric(std::move(m));
}

CenteredMatrix project_to_constraint(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw std::invalid_argument("project_to_constraint: matrix must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("project_to_constraint: matrix not symmetric");
  Eigen::MatrixXd out = m;
  mirror_upper(out);
  project_in_place(out);
  return CenteredMatrix::fromSymmetric(std::move(out));
}

CenteredMatrix sample_constrained_goe(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("sample_constrained_goe: need n >= 2");
  Engine rng = make_engine(seed);
  Eigen::MatrixXd g = sample_goe(n, rng);
  project_in_place(g);
  return CenteredMatrix::fromSymmetric(std::move(g));
}

CenteredMatrix evolve_exact(const CenteredMatrix& h0, double t, std::uint64_t seed) {
  if (t < 0) throw std::invalid_argument("evolve_exact: need t >= 0");
  if (t == 0) return h0;
  const double decay = std::exp(-t / 2);
  const double noise = std::sqrt(1.0 - std::exp(-t));
  const CenteredMatrix w = sample_constrained_goe(h0.dim(), seed);
  Eigen::MatrixXd m = decay * h0.matrix() + noise * w.matrix();
  return CenteredMatrix::fromSymmetric(std::move(m));
}

CdbmPath evolve_path(const CenteredMatrix& h0, double t_max, int n_steps,
                     std::uint64_t seed, int store_stride) {
  if (t_max <= 0) throw std::invalid_argument("evolve_path: need t_max > 0");
  if (n_steps < 1) throw std::invalid_argument("evolve_path: need n_steps >= 1");
  if (store_stride < 1) throw std::invalid_argument("evolve_path: need store_stride >= 1");

  const int n = h0.dim();
  const double dt = t_max / n_steps;
  const double noise_scale = std::sqrt(dt / n);
  Engine rng = make_engine(split_seed(seed, seed_tag::kNoise));

  CdbmPath path;
  path.seed = seed;
  path.times.push_back(0.0);
  path.states.push_back(h0);

  Eigen::MatrixXd state = h0.matrix();
  for (int k = 1; k <= n_steps; ++k) {
    Eigen::MatrixXd xi = sample_goe(n, rng) * std::sqrt(static_cast<double>(n));
    project_in_place(xi);  // P S P, entry variance O(1)
    state = state - 0.5 * dt * state + noise_scale * xi;
    mirror_upper(state);
    if (k % store_stride == 0 || k == n_steps) {
      path.times.push_back(k * dt);
      path.states.push_back(CenteredMatrix::fromSymmetric(state));
    }
  }
  return path;
}

double constrained_goe_covariance(int n, int i, int j, int k, int l) {
  const auto p = [n](int a, int b) {
    return (a == b ? 1.0 : 0.0) - 1.0 / n;
  };
  return (p(i, k) * p(j, l) + p(i, l) * p(j, k)) / n;
}

}  // namespace rrg
