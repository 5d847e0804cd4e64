#include "fastslow/limit.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <memory>

#include "fastslow/errors.hpp"
#include "fastslow/lyapunov.hpp"

namespace fastslow {

namespace {

// A^{-1} with a loud failure when cond(A) > 1e12.
Mat guarded_inverse(const Mat& A) {
  Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (!(smin > 0) || smax / smin > 1e12)
    throw SingularA("A(x,t) has condition number > 1e12");
  return svd.solve(Mat::Identity(A.rows(), A.cols()));
}

GradientMode resolve_mode(const FastSlowSystem& sys, GradientMode mode) {
  if (mode == GradientMode::automatic)
    return (sys.dA && sys.dC) ? GradientMode::analytic
                              : GradientMode::finite_difference;
  return mode;
}

// d/dx_j of G(x) = C(x,t) A(x,t)^{-1} for all j, either from analytic
// coefficient derivatives or by central differences.
std::vector<Mat> d_CAinv(const FastSlowSystem& sys, const Vec& x, double t,
                         GradientMode mode, double fd_h) {
  const int d = sys.n_slow;
  std::vector<Mat> out(d);
  if (mode == GradientMode::analytic) {
    if (!sys.dA || !sys.dC)
      throw GradientUnavailable(
          "analytic gradient mode requires dA and dC on the system");
    const Mat Ainv = guarded_inverse(sys.A(x, t));
    const Mat C = sys.C(x, t);
    for (int j = 0; j < d; ++j)
      out[j] = sys.dC(x, t, j) * Ainv - C * Ainv * sys.dA(x, t, j) * Ainv;
    return out;
  }
  const double cbrt_eps = std::cbrt(std::numeric_limits<double>::epsilon());
  for (int j = 0; j < d; ++j) {
    const double h = fd_h > 0 ? fd_h : cbrt_eps * (1.0 + std::abs(x[j]));
    Vec xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    const Mat Gp = sys.C(xp, t) * guarded_inverse(sys.A(xp, t));
    const Mat Gm = sys.C(xm, t) * guarded_inverse(sys.A(xm, t));
    out[j] = (Gp - Gm) / (2.0 * h);
  }
  return out;
}

}  // namespace

Mat limit_diffusion(const FastSlowSystem& sys, const Vec& x, double t) {
  return sys.C(x, t) * guarded_inverse(sys.A(x, t)) * sys.B(x, t) +
         sys.P(x, t);
}

Vec limit_drift(const FastSlowSystem& sys, const Vec& x, double t,
                GradientMode mode, double fd_h) {
  mode = resolve_mode(sys, mode);
  const Mat A = sys.A(x, t);
  const Mat B = sys.B(x, t);
  const Mat C = sys.C(x, t);
  const Mat P = sys.P(x, t);
  const Mat Ainv = guarded_inverse(A);

  Vec q0 = C * Ainv * sys.F(x, t) + sys.Q(x, t);

  const std::vector<Mat> dG = d_CAinv(sys, x, t, mode, fd_h);
  const Mat PBt = P * B.transpose();                // n' x n
  const Mat S = solve_stationary_lyapunov(A, B).S;  // n x n, symmetric
  // q0_i += sum_{j,l} (P B^T)_{jl} dG_j(i,l)
  //       + sum_{j,l,l'} C_{jl} S_{ll'} dG_j(i,l')
  for (int j = 0; j < sys.n_slow; ++j) {
    const Vec w = PBt.row(j).transpose() + S * C.row(j).transpose();
    q0 += dG[j] * w;
  }
  return q0;
}

LimitSde reduce_system(const FastSlowSystem& sys, GradientMode mode) {
  auto held = std::make_shared<const FastSlowSystem>(sys);
  LimitSde out;
  out.dim = sys.n_slow;
  out.m_noise = sys.m_noise;
  out.drift = [held, mode](const Vec& x, double t) {
    return limit_drift(*held, x, t, mode);
  };
  out.diffusion = [held](const Vec& x, double t) {
    return limit_diffusion(*held, x, t);
  };
  out.provenance = sys.iso_a ? static_cast<const void*>(sys.iso_a.get())
                             : nullptr;
  return out;
}

}  // namespace fastslow
