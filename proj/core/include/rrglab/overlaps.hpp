#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rrglab/spectral.hpp"

// Eigenvector overlap statistics X_i = sqrt(n) <q, u_i> for unit test
// directions q orthogonal to e, and their Monte Carlo estimators.
//
// Eigenvector signs are not observable: every requested eigenvector gets an
// independent uniform +-1 per trial, which restores the sign symmetry a
// Gaussian limit requires. A deterministic sign rule would condition the
// overlap distribution.

namespace rrg {

enum class TestVectorKind { kCoordinateDifference, kRandomOrthogonal, kIndicatorSet };

struct TestVector {
  Eigen::VectorXd coords;  // unit norm, orthogonal to e
  TestVectorKind kind = TestVectorKind::kCoordinateDifference;
  std::string id;
};

// coordinate-difference: (e_1 - e_2)/sqrt(2)
// random-orthogonal:     normalized Gaussian projected off e
// indicator-set:         normalized centered indicator of a seed-chosen set
//                        of size floor(n^{3/4})
TestVector make_test_vector(TestVectorKind kind, int n, std::uint64_t seed);

struct OverlapSample {
  std::vector<int> indices;    // 1-based spectral indices
  std::vector<double> values;  // X_i, sign-randomized
  std::string test_vector_id;
  std::uint64_t seed = 0;           // sign seed
  bool index1_flagged = false;      // index 1 was requested with q _|_ e
};

OverlapSample compute_overlaps(const SpectralDecomposition& sd,
                               const TestVector& q, std::span<const int> indices,
                               std::uint64_t sign_seed);

// Same computation on a raw eigenvector block (columns = eigenvectors,
// starting at spectral index 2). Shared with the Lanczos measurement path.
std::vector<double> signed_overlaps(const Eigen::MatrixXd& vectors,
                                    const Eigen::VectorXd& q,
                                    std::uint64_t sign_seed);

struct MomentEstimate {
  double mean = 0, second = 0, fourth = 0;
  double mean_se = 0, second_se = 0, fourth_se = 0;
  int trials = 0;
};

// Plug-in mean / second / fourth moments of X_index with jackknife standard
// errors. Requires >= 100 trials.
MomentEstimate estimate_moments(std::span<const OverlapSample> samples, int index);
MomentEstimate estimate_moments_from_values(std::span<const double> x);

struct CorrelationEstimate {
  double value = 0;      // empirical E[X_i X_j]
  double std_error = 0;
  int trials = 0;
};

// Requires i != j, both >= 2, and >= 100 trials.
CorrelationEstimate estimate_decorrelation(std::span<const OverlapSample> samples,
                                           int i, int j);
CorrelationEstimate estimate_decorrelation_from_values(std::span<const double> xi,
                                                       std::span<const double> xj);

struct JointOverlapMatrix {
  int K = 0;  // eigenvector indices 2..K+1
  int m = 0;  // test vectors
  Eigen::MatrixXd rows;  // trials x (m*K)
};

struct JointCovariance {
  Eigen::MatrixXd covariance;       // mK x mK, uncentered second moment
  double deviation_from_identity = 0;  // operator norm of (cov - I)
  bool rank_deficient = false;
};

// Requires trials >= 10 * m * K.
JointCovariance joint_covariance(const JointOverlapMatrix& joint);

struct DelocalizationStats {
  double sup_norm = 0;        // |u_2|_inf
  double mass_deviation = 0;  // | sum_{v in S} u_2(v)^2 - |S|/n |, |S| = floor(n^{3/4})
};

DelocalizationStats delocalization_stats(const SpectralDecomposition& sd,
                                         std::uint64_t set_seed);
DelocalizationStats delocalization_from_vector(const Eigen::VectorXd& u2,
                                               std::uint64_t set_seed);
// Mass deviation of an arbitrary vertex set.
double mass_deviation(const Eigen::VectorXd& u, std::span<const int> set);

// --- overlap dynamics in spectral coordinates -----------------------------
//
// Joint flow of non-constraint eigenvalues and overlaps matching the matrix
// evolution to first order in the step:
//   d lambda_i = (-lambda_i/2 + (1/n) sum_{j != i} 1/(lambda_i - lambda_j)) dt
//                + sqrt(2/n) dB_i
//   d X_i      = (1/sqrt(n)) sum_{j != i} X_j/(lambda_i - lambda_j) db_ij
//                - (1/(2n)) sum_{j != i} (lambda_i - lambda_j)^{-2} X_i dt
// with one shared Brownian motion b_ij = b_ji per unordered pair. The X
// update is applied as a composition of exact pairwise rotations by angles
// phi_ij ~ N(0, dt/(n (lambda_i-lambda_j)^2)): each rotation realizes the
// pair generator exactly, conserves sum_i X_i^2, and stays bounded for any
// gap. Eigenvalues advance by substepped Euler with the Ornstein-Uhlenbeck
// part integrated exactly; substeps adapt to the current minimal gap.

struct OverlapSdeOptions {
  bool with_noise = true;        // pairwise rotation noise on X
  bool evolve_eigenvalues = true;
  int store_stride = 0;          // 0: record only start and end
};

struct OverlapSdeResult {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> overlaps;     // aligned with times
  Eigen::VectorXd final_eigenvalues;
  bool aborted = false;     // gap collapse beyond the integrator resolution
  double min_gap_seen = 0;
  int aborted_step = -1;
};

// `eigenvalues` are the non-constraint eigenvalues in descending order,
// `overlaps` the matching X values (spectral indices 2..n). The dimension n
// of the underlying matrix is eigenvalues.size() + 1.
OverlapSdeResult simulate_overlap_sde(const Eigen::VectorXd& overlaps,
                                      const Eigen::VectorXd& eigenvalues,
                                      double t_max, int n_steps,
                                      std::uint64_t seed,
                                      const OverlapSdeOptions& options = {});

}  // namespace rrg
