#include "fastslow/estimators.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "fastslow/errors.hpp"
#include "fastslow/numeric.hpp"

namespace fastslow {

namespace {

void require_fields(const DimensionlessParams& dp) {
  if (!dp.eta_field || !dp.sigma_field)
    throw DomainMismatch("dimensionless params missing fields");
}

// sigma^2 grad eta^{-2}; the bracketed function of the K3 Lipschitz sup.
Vec k3_inner(const DimensionlessParams& dp, const Vec& y) {
  const double e = dp.eta_field->value(y);
  const double s = dp.sigma_field->value(y);
  return s * s * (-2.0 * std::pow(e, -3.0)) * dp.eta_field->gradient(y);
}

// sigma eta^{-1}; the diffusion coefficient of the reduced equation.
double k3_diffusion(const DimensionlessParams& dp, const Vec& y) {
  return dp.sigma_field->value(y) / dp.eta_field->value(y);
}

// Squared spectral norm of the Jacobian of k3_inner (the analytic
// Delta -> 0 limit of its difference quotients).
double k3_inner_jacobian_sq(const DimensionlessParams& dp, const Vec& y) {
  const double e = dp.eta_field->value(y);
  const double s2 = std::pow(dp.sigma_field->value(y), 2.0);
  const Vec ge = dp.eta_field->gradient(y);
  const Mat he = dp.eta_field->hessian(y);
  const Vec gs2 = 2.0 * dp.sigma_field->value(y) * dp.sigma_field->gradient(y);
  const Vec ginv2 = -2.0 * std::pow(e, -3.0) * ge;
  const Mat hinv2 = 6.0 * std::pow(e, -4.0) * ge * ge.transpose() -
                    2.0 * std::pow(e, -3.0) * he;
  const Mat J = ginv2 * gs2.transpose() + s2 * hinv2;
  Eigen::SelfAdjointEigenSolver<Mat> es(J.transpose() * J,
                                        Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

// |grad (sigma eta^{-1})|^2, the analytic limit for the second K3 branch.
double k3_diffusion_grad_sq(const DimensionlessParams& dp, const Vec& y) {
  const double e = dp.eta_field->value(y);
  const double s = dp.sigma_field->value(y);
  const Vec g = dp.sigma_field->gradient(y) / e -
                s / (e * e) * dp.eta_field->gradient(y);
  return g.squaredNorm();
}

}  // namespace

double stationary_moment_bound(const DimensionlessParams& dp, int n,
                               const Box& domain_box, int grid_density) {
  require_fields(dp);
  if (n < 1 || n > 3) throw OutOfRange("moment order must be 1, 2 or 3");
  double k1 = -std::numeric_limits<double>::infinity();
  for_each_grid_point(domain_box, grid_density, [&](const Vec& y) {
    const double e = dp.eta_field->value(y);
    const double s = dp.sigma_field->value(y);
    k1 = std::max(k1, 1.5 * s * s / e);
  });
  return std::pow(k1, n);
}

MomentReport mc_moments(std::span<const Trajectory> trajectories, double eps,
                        int n, double s, double bound) {
  if (n < 1 || n > 3) throw OutOfRange("moment order must be 1, 2 or 3");
  if (trajectories.size() < 100)
    throw InsufficientPaths("mc_moments needs at least 100 paths");
  const double scale = std::pow(eps, n);
  std::vector<double> vals;
  vals.reserve(trajectories.size());
  for (const auto& tr : trajectories) {
    if (tr.aborted) continue;
    const int i = tr.index_of(s);
    if (i < 0 || tr.fast.empty())
      throw GridMismatch("trajectory lacks fast state at time s");
    vals.push_back(scale * std::pow(tr.fast[i].squaredNorm(), n));
  }
  const MeanWithError m = mean_with_error(vals);
  MomentReport rep;
  rep.n = n;
  rep.s = s;
  rep.mc_value = m.mean;
  rep.std_error = m.std_error;
  rep.bound = bound;
  rep.paths = m.n;
  rep.flagged = m.mean > bound + 4.0 * m.std_error;
  return rep;
}

GronwallConstants gronwall_constants(const DimensionlessParams& dp,
                                     const Box& domain_box, int grid_density,
                                     double s_max) {
  require_fields(dp);
  if (grid_density < 8)
    throw InvalidGrid("gronwall constants need grid density >= 8");
  if (!dp.eta_field->has_analytic_gradient())
    throw GradientUnavailable("gronwall constants need analytic gradients");

  GronwallConstants k;
  k.domain_box = domain_box;
  k.grid_density = grid_density;
  k.s_max = s_max;
  k.eps_used = dp.eps;

  // Pointwise sups on the grid.
  double sup_inv2 = 0, sup_grad_inv2_sq = 0, sup_s2_grad_inv2_sq = 0;
  double k1 = 0, inf_s2_inv2 = std::numeric_limits<double>::infinity();
  double sup_j1_sq = 0, sup_j2_sq = 0;
  std::vector<Vec> grid_pts;
  for_each_grid_point(domain_box, grid_density, [&](const Vec& y) {
    grid_pts.push_back(y);
    const double e = dp.eta_field->value(y);
    const double s = dp.sigma_field->value(y);
    const double s2 = s * s;
    const Vec ginv2 = -2.0 * std::pow(e, -3.0) * dp.eta_field->gradient(y);
    sup_inv2 = std::max(sup_inv2, 1.0 / (e * e));
    sup_grad_inv2_sq = std::max(sup_grad_inv2_sq, ginv2.squaredNorm());
    sup_s2_grad_inv2_sq =
        std::max(sup_s2_grad_inv2_sq, s2 * ginv2.squaredNorm());
    k1 = std::max(k1, 1.5 * s2 / e);
    inf_s2_inv2 = std::min(inf_s2_inv2, s2 / (e * e));
    sup_j1_sq = std::max(sup_j1_sq, k3_inner_jacobian_sq(dp, y));
    sup_j2_sq = std::max(sup_j2_sq, k3_diffusion_grad_sq(dp, y));
  });
  k.K1 = k1;
  k.K4 = 3.0 * inf_s2_inv2;

  const double e1 = dp.eps * k1 * sup_grad_inv2_sq;
  const double e2 = dp.eps * dp.eps * k1 * sup_grad_inv2_sq;
  k.K2_bar =
      2.0 * k1 * (2.0 * sup_inv2 + e1 + 2.0 * e2 + s_max * sup_s2_grad_inv2_sq);

  // Difference-quotient sups over sampled pairs (y, y + Delta); Delta runs
  // over axis and diagonal directions with magnitudes on a log grid down to
  // 1e-4 of the box, plus the analytic Delta -> 0 limits above.
  double l1_sq = sup_j1_sq, l2_sq = sup_j2_sq;
  const int d = domain_box.dim();
  std::vector<Vec> dirs;
  for (int i = 0; i < d; ++i) {
    Vec e = Vec::Zero(d);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  dirs.push_back(Vec::Constant(d, 1.0 / std::sqrt(double(d))));
  const double diam = domain_box.diameter();
  constexpr int kMagnitudes = 12;
  for (const Vec& y : grid_pts) {
    const Vec f1 = k3_inner(dp, y);
    const double f2 = k3_diffusion(dp, y);
    for (const Vec& dir : dirs) {
      for (int im = 0; im < kMagnitudes; ++im) {
        const double mag =
            diam * 1e-4 * std::pow(5e3, im / double(kMagnitudes - 1));
        const Vec yp = y + mag * dir;
        if (!domain_box.contains(yp)) continue;
        const double inv_sq = 1.0 / (mag * mag);
        l1_sq = std::max(l1_sq, (k3_inner(dp, yp) - f1).squaredNorm() * inv_sq);
        const double df2 = k3_diffusion(dp, yp) - f2;
        l2_sq = std::max(l2_sq, df2 * df2 * inv_sq);
      }
    }
  }
  k.K3_bar = 3.0 * std::max(s_max * l1_sq, l2_sq);
  return k;
}

double error_bound(double eps, const GronwallConstants& k, double s) {
  if (!(s >= 0.0 && s < 1.0))
    throw OutOfRange("error bound valid for s in [0, 1)");
  return eps * k.K2_bar * std::exp(k.K3_bar * s);
}

double error_bound_dimensional(double ell, double tau, double m0, double eps,
                               const GronwallConstants& k, double t_seconds) {
  return ell * ell * k.K2_bar * eps *
         std::exp(k.K3_bar * m0 * t_seconds / tau);
}

double ValidityWindow::error_bound_at(double t_seconds) const {
  return ell * ell * K2_bar * eps * std::exp(K3_bar * m0 * t_seconds / tau);
}

ValidityWindow validity_window_scaled(double ell, double tau, double m0,
                                      double eps, const GronwallConstants& k,
                                      double delta_sq) {
  if (!(delta_sq > 0)) throw OutOfRange("delta_sq must be positive");
  ValidityWindow w;
  w.delta_sq = delta_sq;
  w.ell = ell;
  w.tau = tau;
  w.m0 = m0;
  w.eps = eps;
  w.K2_bar = k.K2_bar;
  w.K3_bar = k.K3_bar;
  w.K4 = k.K4;

  // Scattering lower bound: ell^2 t m0 K4 / tau >= delta^2.
  w.t_min = delta_sq * tau / (ell * ell * m0 * k.K4);

  // Smallest t with ell^2 K2 eps exp(K3 m0 t / tau) = delta^2, capped at the
  // s = 1 edge of the Gronwall bound's validity range.
  const double ratio = delta_sq / (ell * ell * k.K2_bar * eps);
  double s_hit;
  if (ratio <= 1.0) {
    s_hit = 0.0;
  } else if (k.K3_bar <= 0.0) {
    s_hit = std::numeric_limits<double>::infinity();
  } else {
    s_hit = std::log(ratio) / k.K3_bar;
  }
  if (s_hit >= 1.0) {
    w.capped = true;
    s_hit = 1.0;
  }
  w.t_max = s_hit * tau / m0;
  w.empty = !(w.t_min < w.t_max);
  return w;
}

ValidityWindow validity_window(const PhysicalParams& p,
                               const GronwallConstants& k, double delta_sq) {
  const DimensionlessParams dp = nondimensionalize(p);
  const double d2 = delta_sq > 0 ? delta_sq : p.r * p.r;
  return validity_window_scaled(p.ell, p.tau, dp.m0, dp.eps, k, d2);
}

}  // namespace fastslow
