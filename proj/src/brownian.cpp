#include "fastslow/brownian.hpp"

#include <cmath>
#include <numbers>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {
constexpr double kPi = std::numbers::pi;

void check_positive(double v, const char* name) {
  if (!(v > 0)) throw DomainMismatch(std::string(name) + " must be positive");
}
}  // namespace

double PhysicalParams::mass() const {
  return (4.0 / 3.0) * kPi * r * r * r * rho_particle;
}

FieldPtr calibrate_noise(FieldPtr mu_field, double T0, double r, double kB) {
  check_positive(T0, "T0");
  check_positive(r, "r");
  check_positive(kB, "kB");
  return sqrt_field(scaled_field(12.0 * kPi * kB * T0 * r, std::move(mu_field)));
}

DimensionlessParams nondimensionalize(const PhysicalParams& p) {
  check_positive(p.r, "r");
  check_positive(p.rho_particle, "rho_particle");
  check_positive(p.T0, "T0");
  check_positive(p.ell, "ell");
  check_positive(p.tau, "tau");
  check_positive(p.mu_bar, "mu_bar");
  if (!p.mu_field) throw DomainMismatch("mu_field missing");

  const double m = p.mass();
  DimensionlessParams dp;
  dp.m0 = m / (6.0 * kPi * p.mu_bar * p.ell * p.tau);
  dp.eps = dp.m0 * dp.m0 * p.ell / p.r;
  dp.sigma_bar_sq = 2.0 * p.kB * p.T0 * p.tau * p.tau / (m * p.ell * p.r);
  dp.eta_field =
      scaled_field(1.0 / p.mu_bar, arg_scaled_field(p.mu_field, p.ell));
  dp.sigma_field = sqrt_field(scaled_field(dp.sigma_bar_sq, dp.eta_field));
  dp.ell = p.ell;
  dp.tau = p.tau;
  dp.mu_bar = p.mu_bar;
  dp.kB = p.kB;
  dp.rho_medium = p.rho_medium;
  return dp;
}

PhysicalParams rephysicalize(const DimensionlessParams& dp) {
  PhysicalParams p;
  p.ell = dp.ell;
  p.tau = dp.tau;
  p.mu_bar = dp.mu_bar;
  p.kB = dp.kB;
  p.rho_medium = dp.rho_medium;
  p.r = dp.m0 * dp.m0 * dp.ell / dp.eps;
  const double m = 6.0 * kPi * dp.mu_bar * dp.ell * dp.tau * dp.m0;
  p.rho_particle = m / ((4.0 / 3.0) * kPi * p.r * p.r * p.r);
  p.T0 = dp.sigma_bar_sq * m * dp.ell * p.r / (2.0 * dp.kB * dp.tau * dp.tau);
  p.nu = dp.rho_medium > 0 ? dp.mu_bar / dp.rho_medium : 0.0;
  p.mu_field =
      scaled_field(dp.mu_bar, arg_scaled_field(dp.eta_field, 1.0 / dp.ell));
  return p;
}

PhysicalParams water_preset() {
  PhysicalParams p;
  p.ell = 1.0;
  p.tau = 1.0;
  p.rho_particle = 1e3;
  p.rho_medium = 1e3;
  p.r = 1e-6 * p.ell;
  p.T0 = 300.0;
  p.nu = 1.4e-6;
  p.mu_bar = p.nu * p.rho_medium;
  p.mu_field = constant_field(p.mu_bar, Box::cube(-p.ell, p.ell, 3));
  return p;
}

PhysicalParams water_preset(FieldPtr eta_profile) {
  PhysicalParams p = water_preset();
  if (!eta_profile) return p;
  // mu(x) = mu_bar * eta(x/ell); the profile is declared in y-units.
  p.mu_field = scaled_field(
      p.mu_bar, arg_scaled_field(std::move(eta_profile), 1.0 / p.ell));
  return p;
}

LimitSde brownian_limit_sde(const DimensionlessParams& dp) {
  if (!dp.eta_field || !dp.sigma_field)
    throw DomainMismatch("dimensionless params missing fields");
  if (!dp.eta_field->has_analytic_gradient())
    throw GradientUnavailable("brownian limit SDE needs grad eta");
  const FieldPtr eta = dp.eta_field;
  const FieldPtr sigma = dp.sigma_field;
  const int d = eta->dim();

  LimitSde sde;
  sde.dim = d;
  sde.m_noise = d;
  sde.drift = [eta, sigma](const Vec& y, double) -> Vec {
    const double e = eta->value(y);
    const double s = sigma->value(y);
    const double c = s / e;  // sigma * eta^{-1}
    return -0.5 * c * c * (eta->gradient(y) / e);
  };
  sde.diffusion = [eta, sigma, d](const Vec& y, double) -> Mat {
    return (sigma->value(y) / eta->value(y)) * Mat::Identity(d, d);
  };
  sde.provenance = eta.get();
  return sde;
}

Vec shift_vector(const PhysicalParams& p, const Vec& x) {
  if (!p.mu_field) throw DomainMismatch("mu_field missing");
  if (!p.mu_field->has_analytic_gradient())
    throw GradientUnavailable("shift vector needs grad mu");
  const double mu = p.mu_field->value(x);
  const double b2 = 12.0 * kPi * p.kB * p.T0 * mu * p.r;
  // grad mu^{-2} = -2 mu^{-3} grad mu
  const Vec grad_inv2 = -2.0 * std::pow(mu, -3.0) * p.mu_field->gradient(x);
  return 0.25 / p.r * b2 * grad_inv2;
}

FastSlowSystem make_physical_velocity_system(const PhysicalParams& p) {
  if (!p.mu_field) throw DomainMismatch("mu_field missing");
  FieldPtr drag = scaled_field(6.0 * kPi * p.r, p.mu_field);
  FieldPtr noise = calibrate_noise(p.mu_field, p.T0, p.r, p.kB);
  FastSlowSystem sys = make_brownian_system(std::move(drag), std::move(noise),
                                            p.mass());
  return sys;
}

}  // namespace fastslow
