#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>

#include "rrglab/ensemble.hpp"
#include "rrglab/graph.hpp"

// Lanczos with full reorthogonalization for the top non-constraint
// eigenpairs of matrices in the constrained space. The operator is applied
// on the complement of e (start vector and iterates are kept orthogonal to
// e), so the constraint pair never enters the Krylov space and the Ritz
// pairs approximate the spectral indices 2, 3, ... directly.
//
// This is the measurement fast path for statistics that need only a few
// edge eigenpairs; decompose() remains the reference and the two agree to
// solver tolerance (see the spectral tests).

namespace rrg {

struct TopEigenpairs {
  Eigen::VectorXd values;   // descending, k entries
  Eigen::MatrixXd vectors;  // n x k, orthonormal, aligned with values
  int iterations = 0;
  bool converged = false;
};

using ApplyFn =
    std::function<void(Eigen::Ref<const Eigen::VectorXd>, Eigen::Ref<Eigen::VectorXd>)>;

// Generic driver. `apply` must map the complement of e into itself.
// max_iter = 0 picks a budget from k and n.
TopEigenpairs lanczos_topk(const ApplyFn& apply, int n, int k,
                           std::uint64_t seed, double tol = 1e-9,
                           int max_iter = 0);

// Top-k of a dense constrained matrix.
TopEigenpairs topk_nonconstraint(const CenteredMatrix& m, int k,
                                 std::uint64_t seed, double tol = 1e-9,
                                 int max_iter = 0);

// Top-k of the centered adjacency of g without densifying: on the
// complement of e the centered adjacency acts as A/sqrt(d-1).
TopEigenpairs topk_graph(const RegularGraph& g, int k, std::uint64_t seed,
                         double tol = 1e-9, int max_iter = 0);

}  // namespace rrg
