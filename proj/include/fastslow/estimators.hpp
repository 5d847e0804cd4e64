#pragma once

#include <span>

#include "fastslow/brownian.hpp"
#include "fastslow/common.hpp"
#include "fastslow/fields.hpp"
#include "fastslow/system.hpp"

namespace fastslow {

struct MomentReport {
  int n = 1;              // moment order (1, 2, 3)
  double s = 0;           // time
  double mc_value = 0;    // eps^n * mean |u(s)|^{2n}
  double std_error = 0;   // of mc_value
  double bound = 0;       // K1^n
  bool flagged = false;   // mc_value > bound + 4 std errors
  std::size_t paths = 0;
};

// Sup/inf constants of the Gronwall machinery, grid-evaluated over the box.
struct GronwallConstants {
  double K1 = 0;      // sup 3 sigma^2 / (2 eta)
  double K2_bar = 0;  // K2(s = s_max)
  double K3_bar = 0;  // K3(s = s_max)
  double K4 = 0;      // 3 inf sigma^2 eta^{-2}
  Box domain_box;
  int grid_density = 0;
  double s_max = 1.0;
  double eps_used = 0;
};

// Time window [t_min, t_max) on which the diffusing displacement exceeds the
// observation floor delta^2 while the approximation error stays below it.
// An empty window is a legal outcome, not an error.
struct ValidityWindow {
  double t_min = 0;     // seconds
  double t_max = 0;     // seconds
  double delta_sq = 0;  // [m^2]
  bool empty = false;
  bool capped = false;  // error curve never reached delta^2 before s = 1
  double ell = 1, tau = 1, m0 = 0, eps = 0;
  double K2_bar = 0, K3_bar = 0, K4 = 0;

  // Dimensional Gronwall curve ell^2 K2_bar eps exp(K3_bar m0 t / tau).
  double error_bound_at(double t_seconds) const;
};

// K1^n with K1 = sup_y 3 sigma^2(y) / (2 eta(y)); n in {1,2,3}.
double stationary_moment_bound(const DimensionlessParams& dp, int n,
                               const Box& domain_box, int grid_density);

// eps^n M|u(s)|^{2n} Monte Carlo estimate from recorded fast states.
MomentReport mc_moments(std::span<const Trajectory> trajectories, double eps,
                        int n, double s, double bound);

GronwallConstants gronwall_constants(const DimensionlessParams& dp,
                                     const Box& domain_box, int grid_density,
                                     double s_max = 1.0);

// eps * K2_bar * exp(K3_bar * s); valid for s in [0, 1).
double error_bound(double eps, const GronwallConstants& k, double s);

// Dimensional form ell^2 K2_bar eps exp(K3_bar m0 t / tau) at time t seconds.
double error_bound_dimensional(double ell, double tau, double m0, double eps,
                               const GronwallConstants& k, double t_seconds);

// Window from the scattering lower bound ell^2 t m0 K4 / tau >= delta^2 and
// the Gronwall curve crossing delta^2; formula-level API so regimes that are
// not simulatable (eps ~ 1e-18) can be evaluated directly.
ValidityWindow validity_window_scaled(double ell, double tau, double m0,
                                      double eps, const GronwallConstants& k,
                                      double delta_sq);

// Same, with (m0, eps) derived from the physical parameters; delta_sq <= 0
// selects the default r^2.
ValidityWindow validity_window(const PhysicalParams& p,
                               const GronwallConstants& k,
                               double delta_sq = 0.0);

}  // namespace fastslow
