#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rrglab/graph.hpp"

// Matrices living on the constrained space
//   M0 = { M : M = M^T, M e = 0 },   e = (1,...,1)^T.
//
// The normalized centered adjacency of a d-regular graph,
//   H = A/sqrt(d-1) - (d/sqrt(d-1)) e e^T / n,
// lies in M0, as does the projected Gaussian ensemble W = P G P with
// P = I - e e^T / n, and the Ornstein-Uhlenbeck flow
//   dH_t = -(1/2) H_t dt + n^{-1/2} dW_t
// with per-step noise P S P. The flow's stationary law is the projected
// Gaussian ensemble, and the exact one-time solution is
//   H_t = exp(-t/2) H_0 + sqrt(1 - exp(-t)) W.

namespace rrg {

// Row sums must vanish within kRowSumTol * dim.
inline constexpr double kRowSumTol = 1e-10;

class CenteredMatrix {
 public:
  // Validates exact symmetry (as stored) and the row-sum tolerance.
  static CenteredMatrix fromSymmetric(Eigen::MatrixXd m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& matrix() const { return m_; }
  double maxAbsRowSum() const { return m_.rowwise().sum().cwiseAbs().maxCoeff(); }

 private:
  explicit CenteredMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {}
  Eigen::MatrixXd m_;
};

struct CdbmPath {
  std::vector<double> times;            // increasing, times[0] == 0
  std::vector<CenteredMatrix> states;   // states[0] == initial matrix
  std::uint64_t seed = 0;
};

// H = A/sqrt(d-1) - (d/sqrt(d-1)) e e^T / n. Requires audit_regularity(g).
CenteredMatrix build_centered_adjacency(const RegularGraph& g);

// P M P with P = I - e e^T / n. Rejects non-symmetric input; acts as the
// identity on matrices already in the constrained space.
CenteredMatrix project_to_constraint(const Eigen::MatrixXd& m);

// W = P G P with G a GOE draw (off-diagonal variance 1/n, diagonal 2/n).
// Entry covariance, exactly:
//   E[W_ij W_kl] = (P_ik P_jl + P_il P_jk) / n
//                = (1/n)(d_ik d_jl + d_il d_jk
//                        - (d_ik + d_jl + d_il + d_jk)/n + 2/n^2).
CenteredMatrix sample_constrained_goe(int n, std::uint64_t seed);

// Closed-form solution of the flow: exp(-t/2) h0 + sqrt(1-exp(-t)) W(seed).
// Exact in distribution at time t; t = 0 returns h0 bit for bit.
CenteredMatrix evolve_exact(const CenteredMatrix& h0, double t, std::uint64_t seed);

// Euler-Maruyama trajectory with per-step constrained noise P S P. The
// marginal at t_max converges weakly to evolve_exact's law as n_steps grows;
// use it only for pathwise statistics. Every step is integrated; states are
// recorded every store_stride steps (initial and final state always kept).
CdbmPath evolve_path(const CenteredMatrix& h0, double t_max, int n_steps,
                     std::uint64_t seed, int store_stride = 1);

// Closed-form covariance of the projected ensemble (the formula above).
double constrained_goe_covariance(int n, int i, int j, int k, int l);

}  // namespace rrg
