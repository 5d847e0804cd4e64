#include "fastslow/system.hpp"

#include <cmath>
#include <limits>

#include "fastslow/errors.hpp"

namespace fastslow {

int Trajectory::index_of(double s) const {
  const double tol = 1e-9 * std::max(1.0, std::abs(s));
  for (std::size_t i = 0; i < t.size(); ++i)
    if (std::abs(t[i] - s) <= tol) return static_cast<int>(i);
  return -1;
}

namespace {

// Extremal eigenvalue of sym(A) over the sampled (x, t); which = +1 for the
// maximum, -1 for the minimum.
double sym_extreme(const FastSlowSystem& sys, const Box& box, int density,
                   const std::vector<double>& ts, int which) {
  if (density < 2) throw InvalidGrid("grid density must be >= 2 per axis");
  for (int i = 0; i < box.dim(); ++i)
    if (!(box.lo[i] < box.hi[i]))
      throw InvalidGrid("degenerate domain box");
  double ext = -which * std::numeric_limits<double>::infinity();
  for_each_grid_point(box, density, [&](const Vec& x) {
    for (double t : ts) {
      const Mat a = sys.A(x, t);
      const Mat s = 0.5 * (a + a.transpose());
      Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
      const double v = which > 0 ? es.eigenvalues().maxCoeff()
                                 : es.eigenvalues().minCoeff();
      ext = which > 0 ? std::max(ext, v) : std::min(ext, v);
    }
  });
  return ext;
}

}  // namespace

double verify_stability(const FastSlowSystem& sys, const Box& domain_box,
                        int grid_density, const std::vector<double>& ts) {
  const double gamma = sym_extreme(sys, domain_box, grid_density, ts, -1);
  if (!(gamma > 0))
    throw StabilityViolation(
        "symmetric part of A is not positive definite on the sampled domain");
  return gamma;
}

double stability_upper(const FastSlowSystem& sys, const Box& domain_box,
                       int grid_density, const std::vector<double>& ts) {
  return sym_extreme(sys, domain_box, grid_density, ts, +1);
}

FastSlowSystem make_brownian_system(FieldPtr eta, FieldPtr sigma, double eps) {
  if (!eta || !sigma) throw DomainMismatch("null field");
  if (eta->dim() != sigma->dim() || !(eta->domain() == sigma->domain()))
    throw DomainMismatch("eta and sigma must share one domain box");
  if (!(eps > 0)) throw DomainMismatch("eps must be positive");

  const int d = eta->dim();
  FastSlowSystem sys;
  sys.n_fast = sys.n_slow = sys.m_noise = d;
  sys.eps = eps;
  sys.A = [eta, d](const Vec& x, double) -> Mat {
    return eta->value(x) * Mat::Identity(d, d);
  };
  sys.B = [sigma, d](const Vec& x, double) -> Mat {
    return sigma->value(x) * Mat::Identity(d, d);
  };
  sys.C = [d](const Vec&, double) -> Mat { return Mat::Identity(d, d); };
  sys.P = [d](const Vec&, double) -> Mat { return Mat::Zero(d, d); };
  sys.F = [d](const Vec&, double) -> Vec { return Vec::Zero(d); };
  sys.Q = [d](const Vec&, double) -> Vec { return Vec::Zero(d); };
  if (eta->has_analytic_gradient()) {
    sys.dA = [eta, d](const Vec& x, double, int j) -> Mat {
      return eta->gradient(x)[j] * Mat::Identity(d, d);
    };
  }
  sys.dC = [d](const Vec&, double, int) -> Mat { return Mat::Zero(d, d); };
  sys.iso_a = std::move(eta);
  sys.iso_b = std::move(sigma);
  return sys;
}

}  // namespace fastslow
