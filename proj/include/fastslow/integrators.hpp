#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fastslow/common.hpp"
#include "fastslow/limit.hpp"
#include "fastslow/numeric.hpp"
#include "fastslow/system.hpp"
#include "fastslow/wiener.hpp"

namespace fastslow {

enum class Scheme {
  euler_maruyama,     // explicit Euler on both lines at the path grid
  exact_ou_fast,      // frozen-coefficient exact fast line, Euler slow line
  joint_ou_brownian,  // conditionally-exact joint (u, y) step; iso systems
};

// dt is the nominal slow step; for euler-maruyama the path must live on the
// fine grid dt/substeps_fast and both lines are stepped there. The other
// schemes do not substep.
struct SchemeConfig {
  Scheme scheme = Scheme::euler_maruyama;
  double dt = 0;
  int substeps_fast = 1;
  // Recording stride in fine steps; 0 records on the nominal slow grid.
  int record_stride = 0;
  double overflow_guard = 1e12;

  SchemeConfig(Scheme s, double dt_, int substeps = 1);

  // Enforces the explicit-Euler fast-line bound
  // dt/substeps_fast < eps / (2 * gamma_max) over the sampled domain.
  static SchemeConfig checked(Scheme s, double dt, int substeps,
                              const FastSlowSystem& sys, const Box& domain_box,
                              int grid_density = 9);

  double fine_dt() const { return dt / substeps_fast; }
};

// Integrates both lines of the full system along the given path. The slow
// line consumes the same increments as the fast line. Paths whose state norm
// exceeds overflow_guard are marked aborted and truncated.
Trajectory simulate_full(const FastSlowSystem& sys, const Vec& x0,
                         const Vec& y0, const WienerPath& path,
                         const SchemeConfig& cfg);

// Euler-Maruyama on dx = q0 dt + C0 dw at the nominal slow step, consuming
// sums of the same path's fine increments, so full and reduced runs are
// driven by one w(t).
Trajectory simulate_reduced(const LimitSde& sde, const Vec& x0,
                            const WienerPath& path, const SchemeConfig& cfg);

// |x_full_slow(s) - x_reduced(s)|^2 for one shared-path pair.
double squared_slow_distance(const Trajectory& full, const Trajectory& reduced,
                             double s);

struct StrongError {
  MeanWithError stat;
  std::size_t aborted = 0;
};

// Monte Carlo mean of the squared slow-state distance at time s over
// shared-path pairs; aborted pairs are excluded and counted.
StrongError strong_error(std::span<const Trajectory> full,
                         std::span<const Trajectory> reduced, double s);

// u(0) drawn from the frozen-coefficient equilibrium N(0, S(x0)/eps).
Vec sample_thermal_fast(const FastSlowSystem& sys, const Vec& x0, double t0,
                        std::uint64_t seed, std::uint64_t path_index);

struct EnsembleConfig {
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  int threads = 0;
};

// Full-system ensemble; y0 = nullopt samples the thermal initial condition
// per path. Records only the endpoints unless record_stride says otherwise.
std::vector<Trajectory> simulate_full_ensemble(const FastSlowSystem& sys,
                                               const Vec& x0,
                                               const std::optional<Vec>& y0,
                                               double horizon,
                                               const SchemeConfig& cfg,
                                               const EnsembleConfig& ens);

struct EnsembleStrongError {
  MeanWithError mse;
  std::size_t aborted = 0;
};

// Shared-path full-vs-reduced ensemble at a common horizon. Deterministic for
// a given (seed, n_paths) independent of the worker count.
EnsembleStrongError ensemble_strong_error(const FastSlowSystem& sys,
                                          const LimitSde& sde, const Vec& x0,
                                          bool thermal_init, double horizon,
                                          const SchemeConfig& cfg,
                                          const EnsembleConfig& ens);

}  // namespace fastslow
