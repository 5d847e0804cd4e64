#include "fastslow/ou.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "fastslow/errors.hpp"
#include "fastslow/lyapunov.hpp"

namespace fastslow {

namespace {

// Series coefficients of the theta-normalized moment kernels
//   g0 = (1-E)/theta, g1 = (1-E^2)/(2 theta), g2 = (theta-(1-E))/theta^2,
//   g3 = (theta - 2(1-E) + (1-E^2)/2)/theta^3, g4 = ((1-E)-(1-E^2)/2)/theta^2
// with E = e^{-theta}. Direct formulas cancel badly below theta ~ 0.25.
constexpr int kTerms = 13;
constexpr double kSeriesSwitch = 0.25;

constexpr double kG0[kTerms] = {1.0, -1.0 / 2, 1.0 / 6, -1.0 / 24, 1.0 / 120,
                                -1.0 / 720, 1.0 / 5040, -1.0 / 40320,
                                1.0 / 362880, -1.0 / 3628800, 1.0 / 39916800,
                                -1.0 / 479001600, 1.0 / 6227020800};
constexpr double kG1[kTerms] = {1.0, -1.0, 2.0 / 3, -1.0 / 3, 2.0 / 15,
                                -2.0 / 45, 4.0 / 315, -1.0 / 315, 2.0 / 2835,
                                -2.0 / 14175, 4.0 / 155925, -2.0 / 467775,
                                4.0 / 6081075};
constexpr double kG2[kTerms] = {1.0 / 2, -1.0 / 6, 1.0 / 24, -1.0 / 120,
                                1.0 / 720, -1.0 / 5040, 1.0 / 40320,
                                -1.0 / 362880, 1.0 / 3628800, -1.0 / 39916800,
                                1.0 / 479001600, -1.0 / 6227020800,
                                1.0 / 87178291200};
constexpr double kG3[kTerms] = {1.0 / 3, -1.0 / 4, 7.0 / 60, -1.0 / 24,
                                31.0 / 2520, -1.0 / 320, 127.0 / 181440,
                                -17.0 / 120960, 73.0 / 2851200,
                                -31.0 / 7257600, 2047.0 / 3113510400,
                                -1.0 / 10644480, 8191.0 / 653837184000};
constexpr double kG4[kTerms] = {1.0 / 2, -1.0 / 2, 7.0 / 24, -1.0 / 8,
                                31.0 / 720, -1.0 / 80, 127.0 / 40320,
                                -17.0 / 24192, 73.0 / 518400, -31.0 / 1209600,
                                2047.0 / 479001600, -1.0 / 1520640,
                                8191.0 / 87178291200};

double horner(const double* c, double theta) {
  double v = c[kTerms - 1];
  for (int k = kTerms - 2; k >= 0; --k) v = v * theta + c[k];
  return v;
}

}  // namespace

OuStepMoments ou_step_moments(double a, double dt) {
  if (!(dt > 0)) throw OutOfRange("ou_step_moments: dt must be positive");
  if (a < 0) throw OutOfRange("ou_step_moments: a must be >= 0");
  OuStepMoments m;
  const double theta = a * dt;
  m.theta = theta;
  m.decay = std::exp(-theta);
  double g0, g1, g2, g3, g4;
  if (theta < kSeriesSwitch) {
    g0 = horner(kG0, theta);
    g1 = horner(kG1, theta);
    g2 = horner(kG2, theta);
    g3 = horner(kG3, theta);
    g4 = horner(kG4, theta);
  } else {
    const double em1 = -std::expm1(-theta);        // 1 - e^{-theta}
    const double em2 = -std::expm1(-2.0 * theta);  // 1 - e^{-2 theta}
    g0 = em1 / theta;
    g1 = em2 / (2.0 * theta);
    g2 = (theta - em1) / (theta * theta);
    g3 = (theta - 2.0 * em1 + 0.5 * em2) / (theta * theta * theta);
    g4 = (em1 - 0.5 * em2) / (theta * theta);
  }
  m.relax = dt * g0;
  m.var_u = dt * g1;
  m.cov_uw = dt * g0;
  m.var_y = dt * dt * dt * g3;
  m.cov_yw = dt * dt * g2;
  m.cov_uy = dt * dt * g4;
  return m;
}

OuJointStep ou_joint_step(double a, double b, double dt, double u, double y,
                          double dw, double z1, double z2) {
  const OuStepMoments m = ou_step_moments(a, dt);
  // Condition (I1, I2) on I0 = dw; Var I0 = dt.
  const double su = m.cov_uw / dt;
  const double sy = m.cov_yw / dt;
  const double c11 = std::max(m.var_u - m.cov_uw * m.cov_uw / dt, 0.0);
  const double c12 = m.cov_uy - m.cov_uw * m.cov_yw / dt;
  const double c22 = std::max(m.var_y - m.cov_yw * m.cov_yw / dt, 0.0);
  const double l11 = std::sqrt(c11);
  const double l21 = l11 > 0 ? c12 / l11 : 0.0;
  const double l22 = std::sqrt(std::max(c22 - l21 * l21, 0.0));

  const double i1 = su * dw + l11 * z1;
  const double i2 = sy * dw + l21 * z1 + l22 * z2;
  OuJointStep step;
  step.u_next = m.decay * u + b * i1;
  step.y_next = y + m.relax * u + b * i2;
  return step;
}

OuExactMoments ou_exact_moments(const Mat& A, const Vec& F, const Mat& B,
                                double eps, double dt) {
  const int n = static_cast<int>(A.rows());
  OuExactMoments m;
  m.decay = (-(dt / eps) * A).exp();
  if (F.isZero(0.0)) {
    m.offset = Vec::Zero(n);
  } else {
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) throw SingularA("exact OU step: A singular");
    m.offset = (Mat::Identity(n, n) - m.decay) * lu.solve(F);
  }
  if (B.isZero(0.0)) {
    m.cov = Mat::Zero(n, n);
    m.cov_sqrt = Mat::Zero(n, n);
    return m;
  }
  const Mat S_eps = solve_stationary_lyapunov(A, B).S / eps;
  m.cov = S_eps - m.decay * S_eps * m.decay.transpose();
  m.cov = 0.5 * (m.cov + m.cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Mat> es(m.cov);
  Vec lam = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  m.cov_sqrt = es.eigenvectors() * lam.asDiagonal() *
               es.eigenvectors().transpose();
  return m;
}

Vec exact_ou_fast_step(const Mat& A, const Vec& F, const Mat& B, double eps,
                       const Vec& y, double dt, const Vec& increment) {
  const int n = static_cast<int>(A.rows());
  const int mdim = static_cast<int>(B.cols());
  if (increment.size() != mdim)
    throw GridMismatch("exact OU step: increment size != noise dimension");
  if (n > mdim)
    throw GridMismatch("exact OU step: requires m_noise >= n_fast");
  const OuExactMoments m = ou_exact_moments(A, F, B, eps, dt);
  const Vec z = increment.head(n) / std::sqrt(dt);
  return m.decay * y + m.offset + m.cov_sqrt * z;
}

}  // namespace fastslow
