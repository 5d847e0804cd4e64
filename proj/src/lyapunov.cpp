#include "fastslow/lyapunov.hpp"

#include <Eigen/Eigenvalues>
#include <complex>

#include "fastslow/errors.hpp"

namespace fastslow {

LyapunovSolution solve_stationary_lyapunov(const Mat& A, const Mat& B) {
  const int n = static_cast<int>(A.rows());
  if (A.cols() != n || B.rows() != n)
    throw SolveFailure("Lyapunov: incompatible shapes");

  {
    const Mat sym = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym, Eigen::EigenvaluesOnly);
    if (!(es.eigenvalues().minCoeff() > 0))
      throw UnstableA(
          "Lyapunov: symmetric part of A not positive definite; "
          "the stationary integral diverges");
  }

  const Mat Q = B * B.transpose();

  using CMat = Eigen::MatrixXcd;
  using CVec = Eigen::VectorXcd;
  Eigen::ComplexSchur<Mat> schur(A);
  if (schur.info() != Eigen::Success)
    throw SolveFailure("Lyapunov: Schur decomposition failed");
  const CMat T = schur.matrixT();
  const CMat U = schur.matrixU();

  // T St + St T^* = U^* Q U, solved column by column from the last one;
  // each column needs one upper-triangular solve with shifted diagonal.
  CMat Ct = U.adjoint() * Q * U;
  CMat St(n, n);
  for (int j = n - 1; j >= 0; --j) {
    CVec rhs = Ct.col(j);
    for (int k = j + 1; k < n; ++k) rhs -= std::conj(T(j, k)) * St.col(k);
    CMat M = T;
    M.diagonal().array() += std::conj(T(j, j));
    St.col(j) = M.triangularView<Eigen::Upper>().solve(rhs);
  }

  LyapunovSolution sol;
  sol.S = (U * St * U.adjoint()).real();
  sol.S = 0.5 * (sol.S + sol.S.transpose()).eval();
  sol.residual_norm = (A * sol.S + sol.S * A.transpose() - Q).norm();

  const double scale = 1.0 + Q.norm();
  if (!(sol.residual_norm <= 1e-10 * scale))
    throw SolveFailure("Lyapunov: residual exceeds 1e-10 * (1 + |BB^T|)");
  Eigen::SelfAdjointEigenSolver<Mat> es(sol.S, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + sol.S.norm()))
    throw SolveFailure("Lyapunov: solution not positive semidefinite");
  return sol;
}

}  // namespace fastslow
