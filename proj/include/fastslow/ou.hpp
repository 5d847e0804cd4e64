#pragma once

#include "fastslow/common.hpp"

namespace fastslow {

// Second moments of one frozen-coefficient step of the scalar pair
//   du = -a u dt' + dw,   dy = u dt'
// over [0, dt], written with the unit-noise stochastic integrals
//   I0 = dw(0..dt), I1 = int e^{-a(dt-s)} dw, I2 = int (1-e^{-a(dt-s)})/a dw
// so that u+ = decay*u + b I1 and y+ = y + relax*u + b I2 for noise scale b.
// All entries are smooth in theta = a*dt down to a = 0; small-theta branches
// use series to avoid cancellation.
struct OuStepMoments {
  double theta = 0;
  double decay = 1;  // e^{-theta}
  double relax = 0;  // (1 - e^{-theta})/a
  double var_u = 0;  // Var I1
  double cov_uw = 0; // Cov(I1, I0)
  double var_y = 0;  // Var I2
  double cov_yw = 0; // Cov(I2, I0)
  double cov_uy = 0; // Cov(I1, I2)
};

OuStepMoments ou_step_moments(double a, double dt);

// One conditionally-exact joint step of (u, y) given the shared increment dw;
// z1, z2 are auxiliary unit normals independent of dw. Samples (I1, I2) from
// their exact joint law conditional on I0 = dw, so the step reproduces the
// true frozen-coefficient transition *and* its correlation with the Wiener
// increment consumed by a reduced equation on the same path.
struct OuJointStep {
  double u_next = 0;
  double y_next = 0;
};

OuJointStep ou_joint_step(double a, double b, double dt, double u, double y,
                          double dw, double z1, double z2);

// Mean map and noise covariance of the frozen-coefficient fast line
//   eps dy = (-A y + F) dt + B dw
// over one step: mean = E y + (I - E) A^{-1} F with E = exp(-A dt/eps),
// cov = S/eps - E (S/eps) E^T, S the stationary Lyapunov solution.
struct OuExactMoments {
  Mat decay;      // E
  Vec offset;     // (I - E) A^{-1} F
  Mat cov;        // symmetric PSD
  Mat cov_sqrt;   // PSD square root (eigendecomposition, negatives clamped)
};

OuExactMoments ou_exact_moments(const Mat& A, const Vec& F, const Mat& B,
                                double eps, double dt);

// Marginally exact fast-line step; the standardized increment supplies the
// underlying Gaussians (requires n <= m), which couples the step to the path.
Vec exact_ou_fast_step(const Mat& A, const Vec& F, const Mat& B, double eps,
                       const Vec& y, double dt, const Vec& increment);

}  // namespace fastslow
