#include "bayesrake/subspace.hpp"

#include <cmath>

#include "bayesrake/error.hpp"

namespace bayesrake {

SubspaceBasis null_space_basis(const LoadingMatrix& L) {
  const Eigen::MatrixXd dense = L.dense();
  if (dense.cwiseAbs().maxCoeff() == 0.0)
    throw Error("loading matrix is zero");

  Eigen::FullPivLU<Eigen::MatrixXd> lu(dense);
  lu.setThreshold(1e-10);
  SubspaceBasis basis;
  basis.rank = static_cast<int>(lu.rank());
  basis.d_null = L.cols() - basis.rank;
  if (basis.d_null == 0) {
    basis.C.resize(L.cols(), 0);
    return basis;
  }

  // Orthonormalize the LU kernel; the 0/1 structure keeps the kernel well
  // conditioned, QR just tidies it up.
  const Eigen::MatrixXd kernel = lu.kernel();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(kernel);
  Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(L.cols(), basis.d_null);

  // Fix column signs: largest-magnitude entry positive (first on ties).
  for (int c = 0; c < basis.d_null; ++c) {
    int arg = 0;
    double best = 0.0;
    for (int r = 0; r < Q.rows(); ++r)
      if (std::abs(Q(r, c)) > best + 1e-14) {
        best = std::abs(Q(r, c));
        arg = r;
      }
    if (Q(arg, c) < 0.0) Q.col(c) = -Q.col(c);
  }
  basis.C = std::move(Q);
  return basis;
}

Eigen::MatrixXd projection_matrix(const SubspaceBasis& basis) {
  if (basis.d_null < 1) throw Error("projection needs a nonempty null space");
  const Eigen::MatrixXd gram = basis.C.transpose() * basis.C;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
  const double min_ev = eig.eigenvalues().minCoeff();
  const double max_ev = eig.eigenvalues().maxCoeff();
  if (min_ev <= 1e-10 * std::max(max_ev, 1.0))
    throw Error("rank-deficient basis");
  return basis.C * gram.ldlt().solve(basis.C.transpose());
}

namespace {

void check_n0_feasible(const Eigen::VectorXd& n0, const LoadingMatrix& L,
                       const MarginSet& margins) {
  const double dev = (L.apply(n0) - margins.stacked()).cwiseAbs().maxCoeff();
  if (dev > 1e-8 * std::max(margins.N, 1.0))
    throw Error("initial table does not satisfy the margins (max dev " +
                std::to_string(dev) + ")");
}

SubspacePoint make_point(Eigen::VectorXd n_hat) {
  SubspacePoint p;
  p.nonnegative = (n_hat.array() >= 0.0).all();
  p.n_hat = std::move(n_hat);
  return p;
}

}  // namespace

SubspacePoint basis_point(const Eigen::VectorXd& n0, const SubspaceBasis& basis,
                          const Eigen::VectorXd& t, const LoadingMatrix& L,
                          const MarginSet& margins) {
  check_n0_feasible(n0, L, margins);
  if (t.size() != basis.d_null) throw Error("free vector length mismatch");
  if (!t.allFinite()) throw Error("free vector must be finite");
  return make_point(n0 + basis.C * t);
}

SubspacePoint projection_point(const Eigen::VectorXd& n0,
                               const Eigen::MatrixXd& P,
                               const Eigen::VectorXd& v, const LoadingMatrix& L,
                               const MarginSet& margins) {
  check_n0_feasible(n0, L, margins);
  if (v.size() != P.cols()) throw Error("free vector length mismatch");
  if (!v.allFinite()) throw Error("free vector must be finite");
  return make_point(n0 + P * v);
}

}  // namespace bayesrake
