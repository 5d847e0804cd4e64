#pragma once

#include "fastslow/common.hpp"
#include "fastslow/fields.hpp"
#include "fastslow/limit.hpp"
#include "fastslow/system.hpp"

namespace fastslow {

// Brownian particle in an inhomogeneous-viscosity medium,
//   m dv = -6 pi mu(x) r v dt + b(x) dw,   dx = v dt,
// with the fluctuation-dissipation amplitude b(x) = sqrt(12 pi kB T0 mu(x) r).
// All quantities SI.
struct PhysicalParams {
  double r = 0;             // particle radius [m]
  double rho_particle = 0;  // [kg/m^3]
  double rho_medium = 0;    // [kg/m^3]
  double nu = 0;            // kinematic viscosity [m^2/s]
  double T0 = 0;            // [K]
  double kB = kBoltzmann;   // [J/K]
  double ell = 0;           // length scale [m]
  double tau = 0;           // observation time scale [s]
  FieldPtr mu_field;        // dynamic viscosity mu(x) [Pa s]
  double mu_bar = 0;        // sup mu over the declared domain

  double mass() const;  // (4/3) pi r^3 rho_particle
};

// Dimensionless form  eps du = -eta(y) u ds + sigma(y) dw,  dy = u ds with
// s = m0 t / tau, y = x / ell, u = v tau / (m0 ell),
// eta(y) = mu(y ell)/mu_bar, sigma(y) = sqrt(sigma_bar_sq * eta(y)).
struct DimensionlessParams {
  double m0 = 0;            // m / (6 pi mu_bar ell tau)
  double eps = 0;           // m0^2 ell / r
  double sigma_bar_sq = 0;  // 2 kB T0 tau^2 / (m ell r) = sup sigma^2
  FieldPtr eta_field;
  FieldPtr sigma_field;

  // Physical scales retained for audit and the inverse transform.
  double ell = 1, tau = 1, mu_bar = 0, kB = kBoltzmann, rho_medium = 0;
};

// b(x) = sqrt(12 pi kB T0 mu(x) r).
FieldPtr calibrate_noise(FieldPtr mu_field, double T0, double r,
                         double kB = kBoltzmann);

DimensionlessParams nondimensionalize(const PhysicalParams& p);
PhysicalParams rephysicalize(const DimensionlessParams& dp);

// Water at 300 K: ell = 1 m, tau = 1 s, rho = 1e3 kg/m^3 (particle and
// medium), r = 1e-6 m, nu = 1.4e-6 m^2/s; constant viscosity by default, or
// mu(x) = mu_bar * eta_profile(x/ell) for a profile with values in (0, 1].
PhysicalParams water_preset();
PhysicalParams water_preset(FieldPtr eta_profile);

// Overdamped limit dy = -(1/2)[sigma/eta]^2 grad ln eta ds + (sigma/eta) dw,
// straight from the closed form. Must agree with
// reduce_system(make_brownian_system(eta, sigma, eps)) at every point.
LimitSde brownian_limit_sde(const DimensionlessParams& dp);

// g(x) = (1/4) r^{-1} b^2(x) grad mu^{-2}(x).
Vec shift_vector(const PhysicalParams& p, const Vec& x);

// The velocity equation as a fast-slow system in physical units
// (eps = m, A = 6 pi mu(x) r I, B = b(x) I, slow line dx = v dt).
FastSlowSystem make_physical_velocity_system(const PhysicalParams& p);

}  // namespace fastslow
