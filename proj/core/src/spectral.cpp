#include "rrglab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rrglab/io.hpp"

extern "C" {
void dsyevd_(const char* jobz, const char* uplo, const int* n, double* a,
             const int* lda, double* w, double* work, const int* lwork,
             int* iwork, const int* liwork, int* info);
}

namespace rrg {

namespace {

// Raw ascending eigendecomposition; vectors optional.
int lapack_syevd(Eigen::MatrixXd& a, Eigen::VectorXd& w, bool vectors) {
  const int n = static_cast<int>(a.rows());
  w.resize(n);
  const char* jobz = vectors ? "V" : "N";
  int info = 0, lwork = -1, liwork = -1, iwork_query = 0;
  double work_query = 0;
  dsyevd_(jobz, "L", &n, a.data(), &n, w.data(), &work_query, &lwork,
          &iwork_query, &liwork, &info);
  if (info != 0) return info;
  lwork = static_cast<int>(work_query);
  liwork = iwork_query;
  std::vector<double> work(static_cast<size_t>(lwork));
  std::vector<int> iwork(static_cast<size_t>(liwork));
  dsyevd_(jobz, "L", &n, a.data(), &n, w.data(), work.data(), &lwork,
          iwork.data(), &liwork, &info);
  return info;
}

[[noreturn]] void eigensolver_failure(const CenteredMatrix& m, int info) {
  const std::string path = "eigensolver_failure_" + std::to_string(m.dim()) + ".mat";
  std::ofstream os(path);
  if (os) write_matrix_dump(os, m.matrix());
  throw std::runtime_error("decompose: eigensolver failed (info=" +
                           std::to_string(info) + "), matrix dumped to " + path);
}

}  // namespace

SpectralDecomposition::SpectralDecomposition(Eigen::VectorXd values,
                                             Eigen::MatrixXd vectors)
    : values_(std::move(values)), vectors_(std::move(vectors)) {
  if (vectors_.rows() != vectors_.cols() || vectors_.rows() != values_.size())
    throw std::invalid_argument("SpectralDecomposition: shape mismatch");
}

int SpectralDecomposition::check(int index) const {
  if (index < 1 || index > dim())
    throw std::out_of_range("SpectralDecomposition: index must be in [1, n]");
  return index;
}

double SpectralDecomposition::gramError() const {
  const Eigen::MatrixXd gram = vectors_.transpose() * vectors_;
  return (gram - Eigen::MatrixXd::Identity(dim(), dim())).cwiseAbs().maxCoeff();
}

double SpectralDecomposition::reconstructionError(const Eigen::MatrixXd& source) const {
  const Eigen::MatrixXd rebuilt =
      vectors_ * values_.asDiagonal() * vectors_.transpose();
  return (rebuilt - source).cwiseAbs().maxCoeff();
}

SpectralDecomposition decompose(const CenteredMatrix& m) {
  const int n = m.dim();
  Eigen::MatrixXd a = m.matrix();
  Eigen::VectorXd w;
  if (const int info = lapack_syevd(a, w, true); info != 0)
    eigensolver_failure(m, info);

  // constraint pair = maximal overlap with e/sqrt(n)
  const Eigen::VectorXd overlaps = a.colwise().sum().cwiseAbs() / std::sqrt(double(n));
  int pinned = 0;
  overlaps.maxCoeff(&pinned);

  std::vector<int> order;
  order.reserve(n);
  for (int i = 0; i < n; ++i)
    if (i != pinned) order.push_back(i);
  // descending; stable keeps ascending solver position among ties
  std::stable_sort(order.begin(), order.end(),
                   [&](int i, int j) { return w(i) > w(j); });

  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  values(0) = w(pinned);
  vectors.col(0) = a.col(pinned);
  for (int k = 0; k < n - 1; ++k) {
    values(k + 1) = w(order[k]);
    vectors.col(k + 1) = a.col(order[k]);
  }
  return SpectralDecomposition(std::move(values), std::move(vectors));
}

std::complex<double> m_sc(std::complex<double> z) {
  if (z.imag() <= 0)
    throw std::invalid_argument("m_sc: z must lie in the upper half plane");
  const std::complex<double> root = std::sqrt(z * z - 4.0);
  const std::complex<double> plus = (-z + root) / 2.0;
  return plus.imag() > 0 ? plus : (-z - root) / 2.0;
}

std::complex<double> m_sc(const ComplexPoint& p) { return m_sc(p.z()); }

std::complex<double> resolvent_quadratic_form(const SpectralDecomposition& sd,
                                              const Eigen::VectorXd& q,
                                              std::complex<double> z) {
  const int n = sd.dim();
  if (q.size() != n)
    throw std::invalid_argument("resolvent_quadratic_form: dimension mismatch");
  if (std::abs(q.norm() - 1.0) > 1e-10)
    throw std::invalid_argument("resolvent_quadratic_form: q must be a unit vector");
  if (std::abs(q.sum()) > 1e-10 * std::sqrt(double(n)))
    throw std::invalid_argument("resolvent_quadratic_form: q must be orthogonal to e");
  if (z.imag() <= 0)
    throw std::invalid_argument("resolvent_quadratic_form: z must lie in the upper half plane");

  const Eigen::VectorXd overlaps = sd.vectors().transpose() * q;
  std::complex<double> sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += overlaps(i) * overlaps(i) / (sd.values()(i) - z);
  return sum;
}

DeviationProfile local_law_deviation_profile(const SpectralDecomposition& sd,
                                             const Eigen::VectorXd& q,
                                             std::span<const double> energies,
                                             std::span<const double> etas,
                                             double epsilon) {
  if (energies.empty() || etas.empty())
    throw std::invalid_argument("local_law_deviation_profile: empty grid");
  const int n = sd.dim();
  const double eta_min = std::pow(double(n), -2.0 / 3.0);
  const double window = std::pow(double(n), -2.0 / 3.0 + epsilon);
  constexpr double kSlack = 1e-12;
  for (double e : energies)
    if (std::abs(e - 2.0) > window * (1.0 + kSlack))
      throw std::invalid_argument(
          "local_law_deviation_profile: energy outside |E-2| <= n^(-2/3+epsilon)");
  for (double eta : etas) {
    if (eta < eta_min * (1.0 - kSlack))
      throw std::invalid_argument(
          "local_law_deviation_profile: eta below n^(-2/3)");
    if (eta > 1.0 + kSlack)
      throw std::invalid_argument("local_law_deviation_profile: eta above 1");
  }

  // one pass over the overlaps serves every grid point
  const Eigen::VectorXd overlaps = sd.vectors().transpose() * q;
  const Eigen::VectorXd weights = overlaps.array().square();

  DeviationProfile profile;
  profile.table.reserve(energies.size() * etas.size());
  for (double e : energies) {
    for (double eta : etas) {
      const std::complex<double> z(e, eta);
      std::complex<double> sum = 0.0;
      for (int i = 0; i < n; ++i) sum += weights(i) / (sd.values()(i) - z);
      const double dev = std::abs(sum - m_sc(z));
      profile.table.push_back({e, eta, dev});
      profile.supremum = std::max(profile.supremum, dev);
    }
  }
  return profile;
}

std::vector<double> edge_energy_grid(int n, double epsilon, int n_points) {
  if (n_points < 1) throw std::invalid_argument("edge_energy_grid: need n_points >= 1");
  const double window = std::pow(double(n), -2.0 / 3.0 + epsilon);
  std::vector<double> grid;
  grid.reserve(n_points);
  if (n_points == 1) {
    grid.push_back(2.0);
    return grid;
  }
  for (int k = 0; k < n_points; ++k)
    grid.push_back(2.0 - window + 2.0 * window * k / (n_points - 1));
  return grid;
}

std::vector<double> eta_geometric_grid(int n, int n_points) {
  if (n_points < 2) throw std::invalid_argument("eta_geometric_grid: need n_points >= 2");
  const double lo = std::pow(double(n), -2.0 / 3.0);
  std::vector<double> grid;
  grid.reserve(n_points);
  for (int k = 0; k < n_points; ++k)
    grid.push_back(lo * std::pow(1.0 / lo, double(k) / (n_points - 1)));
  grid.back() = 1.0;
  return grid;
}

std::vector<SpacingEntry> edge_spacing_profile(const SpectralDecomposition& sd,
                                               int k_max) {
  if (k_max < 1) throw std::invalid_argument("edge_spacing_profile: need k_max >= 1");
  if (k_max > sd.dim() / 10)
    throw std::invalid_argument("edge_spacing_profile: k_max must be <= n/10");
  std::vector<SpacingEntry> profile;
  profile.reserve(k_max);
  for (int k = 1; k <= k_max; ++k)
    profile.push_back({k, 2.0 - sd.eigenvalue(k + 1)});
  return profile;
}

GapSumResult gap_sum_from_values(std::span<const double> values, int index) {
  if (index < 2)
    throw std::invalid_argument("gap_sum_statistic: index must be >= 2");
  const int i = index - 2;  // values excludes the constraint pair
  if (i >= static_cast<int>(values.size()))
    throw std::out_of_range("gap_sum_statistic: index beyond spectrum");
  constexpr double kDegenerateGap = 1e-12;
  double sum = 0.0;
  for (int j = 0; j < static_cast<int>(values.size()); ++j) {
    if (j == i) continue;
    const double gap = values[i] - values[j];
    if (std::abs(gap) < kDegenerateGap) return {std::nullopt, true};
    sum += 1.0 / (gap * gap);
  }
  return {sum, false};
}

GapSumResult gap_sum_statistic(const SpectralDecomposition& sd, int index) {
  std::vector<double> values(sd.dim() - 1);
  for (int k = 2; k <= sd.dim(); ++k) values[k - 2] = sd.eigenvalue(k);
  return gap_sum_from_values(values, index);
}

Eigen::VectorXd nonconstraint_eigenvalues(const CenteredMatrix& m) {
  const int n = m.dim();
  if (n < 2)
    throw std::invalid_argument("nonconstraint_eigenvalues: need dim >= 2");
  // Householder reflection sending e/sqrt(n) to the first basis vector:
  // H = I - 2 v v^T with v prop to e/sqrt(n) - e_1. Then (H M H)[2:,2:] is
  // the restriction of M to the complement of e, and its spectrum is the
  // non-constraint spectrum exactly.
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  v(0) -= 1.0;
  v.normalize();
  const Eigen::VectorXd mv = m.matrix() * v;
  const double vmv = v.dot(mv);
  // H M H = M - 2 v (Mv)^T - 2 (Mv) v^T + 4 (v^T M v) v v^T
  Eigen::MatrixXd h = m.matrix();
  h.noalias() -= 2.0 * v * mv.transpose();
  h.noalias() -= 2.0 * mv * v.transpose();
  h.noalias() += 4.0 * vmv * v * v.transpose();
  Eigen::MatrixXd block = h.bottomRightCorner(n - 1, n - 1);
  // exact symmetrization; the reflection is symmetric up to rounding
  block = ((block + block.transpose()) / 2.0).eval();
  Eigen::VectorXd w;
  if (const int info = lapack_syevd(block, w, false); info != 0)
    eigensolver_failure(m, info);
  return w.reverse();
}

}  // namespace rrg
