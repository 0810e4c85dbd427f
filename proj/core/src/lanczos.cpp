#include "rrglab/lanczos.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rrglab/rng.hpp"

namespace rrg {

namespace {

void remove_mean(Eigen::Ref<Eigen::VectorXd> v) { v.array() -= v.mean(); }

}  // namespace

// Thick-restart Lanczos. The basis never grows past m_max columns: at each
// restart the top (k + buffer) Ritz vectors and the last residual direction
// are kept and the recurrence resumes. Orthogonalization is done explicitly
// against the whole retained basis (two classical Gram-Schmidt passes), and
// the projected matrix is filled from those coefficients, which makes the
// arrow-plus-tridiagonal bookkeeping of the restart automatic.
TopEigenpairs lanczos_topk(const ApplyFn& apply, int n, int k,
                           std::uint64_t seed, double tol, int max_iter) {
  if (k < 1) throw std::invalid_argument("lanczos_topk: need k >= 1");
  if (k > n - 1)
    throw std::invalid_argument("lanczos_topk: k exceeds the non-constraint spectrum");

  const int m_max = std::min(n - 1, std::max(2 * k + 40, 60));
  const int kept_target = std::max(k, std::min(k + 12, m_max - 25));
  const int max_matvecs =
      max_iter > 0 ? max_iter : std::max(40 * m_max, 4000);

  Engine rng = make_engine(split_seed(seed, seed_tag::kLanczos));
  std::normal_distribution<double> normal;

  Eigen::MatrixXd basis(n, m_max + 1);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m_max, m_max);
  Eigen::VectorXd w(n), coef, coef2;

  {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = normal(rng);
    remove_mean(v);
    v.normalize();
    basis.col(0) = v;
  }

  int l = 0;  // retained columns from the previous cycle
  int matvecs = 0;
  bool converged = false;
  Eigen::VectorXd theta;
  Eigen::MatrixXd s;
  double beta_last = 0.0;
  int m = 0;
  bool exhausted = false;

  while (!converged && matvecs < max_matvecs && !exhausted) {
    // extend the factorization from column l to m_max
    m = l;
    for (int j = l; j < m_max; ++j) {
      apply(basis.col(j), w);
      remove_mean(w);
      ++matvecs;
      auto q = basis.leftCols(j + 1);
      coef.noalias() = q.transpose() * w;
      w.noalias() -= q * coef;
      coef2.noalias() = q.transpose() * w;
      w.noalias() -= q * coef2;
      coef += coef2;
      t.row(j).head(j + 1) = coef.transpose();
      m = j + 1;
      beta_last = w.norm();
      if (beta_last < 1e-13) {  // complement of e exhausted: exact Ritz pairs
        exhausted = true;
        break;
      }
      basis.col(j + 1) = w / beta_last;
    }

    // Rayleigh-Ritz on the projected matrix
    Eigen::MatrixXd tm(m, m);
    tm.triangularView<Eigen::Lower>() = t.topLeftCorner(m, m);
    tm.triangularView<Eigen::StrictlyUpper>() =
        t.topLeftCorner(m, m).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(tm);
    theta = es.eigenvalues();
    s = es.eigenvectors();

    converged = true;
    for (int i = 0; i < std::min(k, m); ++i) {
      const int col = m - 1 - i;
      const double resid = exhausted ? 0.0 : beta_last * std::abs(s(m - 1, col));
      if (resid > tol * std::max(1.0, std::abs(theta(col)))) {
        converged = false;
        break;
      }
    }
    if (m < k) converged = false;
    if (converged || exhausted || matvecs >= max_matvecs) break;

    // thick restart: compress to the top `kept` Ritz vectors + residual
    const int kept = std::max(1, std::min(kept_target, m - 1));
    Eigen::MatrixXd ritz = basis.leftCols(m) * s.rightCols(kept);
    basis.leftCols(kept) = ritz.rowwise().reverse();  // descending order
    basis.col(kept) = w / beta_last;
    t.setZero();
    for (int i = 0; i < kept; ++i) t(i, i) = theta(m - 1 - i);
    l = kept;
  }

  TopEigenpairs out;
  out.iterations = matvecs;
  const int found = std::min(k, m);
  if (found == 0) throw std::runtime_error("lanczos_topk: empty Krylov space");
  out.values.resize(found);
  out.vectors.resize(n, found);
  for (int i = 0; i < found; ++i) {
    const int col = m - 1 - i;
    out.values(i) = theta(col);
    Eigen::VectorXd u = basis.leftCols(m) * s.col(col);
    remove_mean(u);
    u.normalize();
    out.vectors.col(i) = u;
  }
  out.converged = converged && found == k;
  return out;
}

TopEigenpairs topk_nonconstraint(const CenteredMatrix& m, int k,
                                 std::uint64_t seed, double tol, int max_iter) {
  const auto apply = [&m](Eigen::Ref<const Eigen::VectorXd> x,
                          Eigen::Ref<Eigen::VectorXd> y) {
    y.noalias() = m.matrix().selfadjointView<Eigen::Lower>() * x;
  };
  return lanczos_topk(apply, m.dim(), k, seed, tol, max_iter);
}

TopEigenpairs topk_graph(const RegularGraph& g, int k, std::uint64_t seed,
                         double tol, int max_iter) {
  if (!audit_regularity(g))
    throw std::invalid_argument("topk_graph: graph fails the regularity audit");
  const int n = g.n_vertices;
  std::vector<int> offset(n + 1, 0);
  for (const auto& [u, v] : g.edges) {
    ++offset[u + 1];
    ++offset[v + 1];
  }
  for (int i = 0; i < n; ++i) offset[i + 1] += offset[i];
  std::vector<int> neighbor(offset[n]);
  std::vector<int> cursor(offset.begin(), offset.end() - 1);
  for (const auto& [u, v] : g.edges) {
    neighbor[cursor[u]++] = v;
    neighbor[cursor[v]++] = u;
  }
  const double scale = 1.0 / std::sqrt(double(g.degree - 1));
  const auto apply = [offset = std::move(offset), neighbor = std::move(neighbor),
                      n, scale](Eigen::Ref<const Eigen::VectorXd> x,
                                Eigen::Ref<Eigen::VectorXd> y) {
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int p = offset[i]; p < offset[i + 1]; ++p) acc += x(neighbor[p]);
      y(i) = scale * acc;
    }
  };
  return lanczos_topk(apply, n, k, seed, tol, max_iter);
}

}  // namespace rrg
