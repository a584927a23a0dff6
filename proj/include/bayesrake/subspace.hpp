#pragma once

#include <Eigen/Dense>

#include "bayesrake/table.hpp"

namespace bayesrake {

// Orthonormal basis of the null space of the loading matrix. Column signs are
// canonicalized (largest-magnitude entry positive) so the basis is a pure
// function of L.
struct SubspaceBasis {
  Eigen::MatrixXd C;  // J x d_null
  int d_null = 0;
  int rank = 0;  // rank of L
};

SubspaceBasis null_space_basis(const LoadingMatrix& L);

// P = C (C'C)^{-1} C', the orthogonal projector onto the null space.
Eigen::MatrixXd projection_matrix(const SubspaceBasis& basis);

struct SubspacePoint {
  Eigen::VectorXd n_hat;
  bool nonnegative = false;
};

// N0 + C t. N0 must satisfy the margins (relative 1e-8); the result then
// satisfies them for any t. The nonnegativity flag reports feasibility.
SubspacePoint basis_point(const Eigen::VectorXd& n0, const SubspaceBasis& basis,
                          const Eigen::VectorXd& t, const LoadingMatrix& L,
                          const MarginSet& margins);

// N0 + P v, same contract with the projector in place of the basis.
SubspacePoint projection_point(const Eigen::VectorXd& n0,
                               const Eigen::MatrixXd& P,
                               const Eigen::VectorXd& v, const LoadingMatrix& L,
                               const MarginSet& margins);

}  // namespace bayesrake
