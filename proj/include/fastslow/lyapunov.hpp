#pragma once

#include "fastslow/common.hpp"

namespace fastslow {

// S = integral_0^inf exp(-lambda A) B B^T exp(-lambda A^T) dlambda, the unique
// solution of A S + S A^T = B B^T for stable A.
struct LyapunovSolution {
  Mat S;
  double residual_norm = 0.0;  // ||A S + S A^T - B B^T||_F
};

// Solves the stationary Lyapunov equation by Bartels-Stewart on the complex
// Schur form of A. Requires the symmetric part of A to be positive definite
// (UnstableA otherwise); throws SolveFailure if the returned S violates the
// residual or PSD contract.
LyapunovSolution solve_stationary_lyapunov(const Mat& A, const Mat& B);

}  // namespace fastslow
