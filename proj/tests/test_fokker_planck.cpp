#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fastslow/errors.hpp"
#include "fastslow/fokker_planck.hpp"
#include "fastslow/numeric.hpp"
#include "fastslow/rng.hpp"
#include "test_util.hpp"

using namespace fastslow;
using test::rel_err;

namespace {

DimensionlessParams params_1d(FieldPtr eta, double sigma_bar_sq) {
  DimensionlessParams dp;
  dp.eps = 1e-6;
  dp.sigma_bar_sq = sigma_bar_sq;
  dp.eta_field = eta;
  dp.sigma_field = sqrt_field(scaled_field(sigma_bar_sq, eta));
  return dp;
}

DimensionlessParams bump_1d(double sigma_bar_sq = 2.0) {
  const Box box = Box::cube(-4, 4, 1);
  return params_1d(gaussian_dip_field(Vec::Zero(1), 1.0, 0.5, box),
                   sigma_bar_sq);
}

double grid_variance(const DensityGrid& g) {
  const Vec vol = g.volumes();
  KahanSum m0, m1, m2;
  for (int i = 0; i <= g.n; ++i) {
    m0.add(vol[i] * g.rho[i]);
    m1.add(vol[i] * g.rho[i] * g.node(i));
    m2.add(vol[i] * g.rho[i] * g.node(i) * g.node(i));
  }
  const double mean = m1.value() / m0.value();
  return m2.value() / m0.value() - mean * mean;
}

}  // namespace

TEST_SUITE("fokker_planck") {

TEST_CASE("kolmogorov rhs: heat kernel limit") {
  // q0 = 0, c0 = sqrt(2 D): the operator must converge to D rho'' at O(h^2).
  const double D = 0.7;
  Sde1d sde;
  sde.drift = [](double) { return 0.0; };
  sde.diffusion = [D](double) { return std::sqrt(2.0 * D); };
  auto rho = [](double x) { return std::exp(-0.5 * x * x); };
  auto rho_xx = [&](double x) { return (x * x - 1.0) * rho(x); };

  double err[2];
  const int ns[2] = {128, 256};
  for (int k = 0; k < 2; ++k) {
    DensityGrid g = DensityGrid::make(-4, 4, ns[k]);
    g.fill(rho);
    const Vec r = kolmogorov_rhs(sde, g);
    double worst = 0;
    for (int i = 1; i < g.n; ++i)
      worst = std::max(worst, std::abs(r[i] - D * rho_xx(g.node(i))));
    err[k] = worst;
  }
  CHECK(std::log2(err[0] / err[1]) > 1.9);
}

TEST_CASE("kolmogorov rhs conserves mass in flux form") {
  const auto dp = bump_1d();
  const Sde1d sde = brownian_limit_sde_1d(dp);
  DensityGrid g = DensityGrid::make(-4, 4, 100);
  g.fill([](double) { return 1.0; });
  const Vec r = kolmogorov_rhs(sde, g);
  const Vec vol = g.volumes();
  KahanSum total;
  for (int i = 0; i <= g.n; ++i) total.add(vol[i] * r[i]);
  CHECK(std::abs(total.value()) < 1e-13);
}

TEST_CASE("manufactured solution confirms second order") {
  // q = sin(x), S = 2 + cos(x), rho = exp(-x^2/4);
  // L rho = -(q rho)' + (S rho)'' evaluated analytically.
  Sde1d sde;
  sde.drift = [](double x) { return std::sin(x); };
  sde.diffusion = [](double x) { return std::sqrt(2.0 * (2.0 + std::cos(x))); };
  auto rho = [](double x) { return std::exp(-0.25 * x * x); };
  auto drho = [&](double x) { return -0.5 * x * rho(x); };
  auto d2rho = [&](double x) { return (0.25 * x * x - 0.5) * rho(x); };
  auto lrho = [&](double x) {
    const double q = std::sin(x), dq = std::cos(x);
    const double S = 2.0 + std::cos(x), dS = -std::sin(x),
                 d2S = -std::cos(x);
    return -(dq * rho(x) + q * drho(x)) +
           (d2S * rho(x) + 2.0 * dS * drho(x) + S * d2rho(x));
  };
  double err[2];
  const int ns[2] = {128, 256};
  for (int k = 0; k < 2; ++k) {
    DensityGrid g = DensityGrid::make(-3, 3, ns[k]);
    g.fill(rho);
    const Vec r = kolmogorov_rhs(sde, g);
    double worst = 0;
    for (int i = 1; i < g.n; ++i)
      worst = std::max(worst, std::abs(r[i] - lrho(g.node(i))));
    err[k] = worst;
  }
  CHECK(std::log2(err[0] / err[1]) > 1.9);
}

TEST_CASE("fick rhs basics") {
  const Box box = Box::cube(-4, 4, 1);
  DiffusivityField D;
  D.D = constant_field(0.9, box);
  auto rho = [](double x) { return std::exp(-0.5 * x * x); };

  DensityGrid g = DensityGrid::make(-4, 4, 200);
  g.fill(rho);
  const Vec r = fick_rhs(D, g);
  for (int i = 1; i < g.n; ++i) {
    const double x = g.node(i);
    CHECK(std::abs(r[i] - 0.9 * (x * x - 1.0) * rho(x)) < 5e-3);
  }

  // linear density, constant D: zero interior divergence
  g.fill([](double x) { return 2.0 + 0.25 * x; });
  const Vec rl = fick_rhs(D, g);
  for (int i = 1; i < g.n; ++i) CHECK(std::abs(rl[i]) < 1e-12);
}

TEST_CASE("fick rhs matches an independent non-conservative discretization") {
  const Box box = Box::cube(-2, 2, 1);
  const auto dfield = gaussian_dip_field(Vec::Zero(1), 0.7, 0.4, box);
  DiffusivityField D;
  D.D = dfield;
  auto rho = [](double x) { return 1.0 + 0.3 * std::sin(2.0 * x); };

  double err[2];
  const int ns[2] = {200, 400};
  for (int k = 0; k < 2; ++k) {
    DensityGrid g = DensityGrid::make(-2, 2, ns[k]);
    g.fill(rho);
    const Vec r = fick_rhs(D, g);
    // D rho'' + D' rho' with central differences, assembled independently
    const double h = g.h();
    double worst = 0;
    for (int i = 1; i < g.n; ++i) {
      const double x = g.node(i);
      const double dv = dfield->value(Vec::Constant(1, x));
      const double dg = dfield->gradient(Vec::Constant(1, x))[0];
      const double rxx = (rho(x + h) - 2.0 * rho(x) + rho(x - h)) / (h * h);
      const double rx = (rho(x + h) - rho(x - h)) / (2.0 * h);
      worst = std::max(worst, std::abs(r[i] - (dv * rxx + dg * rx)));
    }
    err[k] = worst;
  }
  CHECK(std::log2(err[0] / err[1]) > 1.9);
}

TEST_CASE("operator equivalence: constant viscosity is exact") {
  const Box box = Box::cube(-4, 4, 1);
  const auto dp = params_1d(constant_field(1.0, box), 2.0);
  std::vector<std::function<double(double)>> suite = {
      [](double x) { return std::exp(-0.5 * x * x); }};
  const double diff =
      operator_equivalence_check(dp, suite, DensityGrid::make(-4, 4, 128));
  // same stencil on both sides; only S = c^2/2 vs D rounding, amplified 1/h^2
  CHECK(diff < 1e-12);
}

TEST_CASE("operator equivalence decays at second order") {
  const auto dp = bump_1d();
  std::vector<std::function<double(double)>> suite = {
      [](double x) { return std::exp(-0.5 * x * x); },
      [](double x) { return 1.0 + 0.5 * std::cos(1.3 * x); }};
  const double d1 =
      operator_equivalence_check(dp, suite, DensityGrid::make(-4, 4, 128));
  const double d2 =
      operator_equivalence_check(dp, suite, DensityGrid::make(-4, 4, 256));
  CHECK(std::log2(d1 / d2) > 1.9);
}

TEST_CASE("mismatched provenance is rejected") {
  const auto dp = bump_1d();
  const auto other = bump_1d();  // different field instance
  const Sde1d sde = brownian_limit_sde_1d(dp);
  const DiffusivityField D = diffusivity_from(other);
  std::vector<std::function<double(double)>> suite = {
      [](double x) { return std::exp(-x * x); }};
  CHECK_THROWS_AS(operator_equivalence_check(sde, D, suite,
                                             DensityGrid::make(-4, 4, 64)),
                  FieldMismatch);
}

TEST_CASE("water diffusivity value") {
  const auto p = water_preset();
  const DiffusivityField D = diffusivity_from(p);
  CHECK(D.value(0.0) == doctest::Approx(1.5696e-13).epsilon(1e-3));
}

TEST_CASE("solve_fick: free diffusion variance grows as 2 D t") {
  const Box box = Box::cube(-8, 8, 1);
  DiffusivityField D;
  D.D = constant_field(0.5, box);
  DensityGrid g = DensityGrid::make(-8, 8, 800);
  const double w0 = 0.25;
  g.fill([=](double x) { return std::exp(-0.5 * x * x / (w0 * w0)); });
  g.normalize();
  const double var0 = grid_variance(g);
  const double t_end = 1.0;
  const auto rep = solve_fick(D, g, t_end, 1e-3);
  CHECK(rep.mass_drift < 1e-10);
  const double var1 = grid_variance(rep.grid);
  CHECK(rel_err(var1 - var0, 2.0 * 0.5 * t_end) < 0.01);
  // weak maximum principle for constant D
  CHECK(rep.grid.rho.maxCoeff() <= g.rho.maxCoeff() + 1e-12);
  CHECK(rep.min_rho > -1e-12);
}

TEST_CASE("solve_fick conserves mass with variable diffusivity") {
  const auto dp = bump_1d();
  const DiffusivityField D = diffusivity_from(dp);
  DensityGrid g = DensityGrid::make(-4, 4, 400);
  g.fill([](double x) { return std::exp(-2.0 * (x - 0.5) * (x - 0.5)); });
  g.normalize();
  const auto rep = solve_fick(D, g, 0.5, 2.5e-4);
  CHECK(rep.mass_drift < 1e-10);
}

TEST_CASE("periodic boundary: constants are invariant and mass conserved") {
  const Box box = Box::cube(0, 2, 1);
  DiffusivityField D;
  D.D = gaussian_dip_field(Vec::Constant(1, 1.0), 0.4, 0.6, box);
  DensityGrid g = DensityGrid::make(0, 2, 128, Boundary::periodic);
  g.fill([](double) { return 0.5; });
  const Vec r = fick_rhs(D, g);
  CHECK(r.cwiseAbs().maxCoeff() < 1e-13);
  DensityGrid g2 = DensityGrid::make(0, 2, 128, Boundary::periodic);
  g2.fill([](double x) { return 1.0 + 0.2 * std::sin(std::numbers::pi * x); });
  const double m0 = g2.mass();
  const auto rep = solve_fick(D, g2, 0.3, 1e-3);
  CHECK(std::abs(rep.grid.mass() - m0) / m0 < 1e-10);
}

TEST_CASE("radial geometry: conservation and free-diffusion second moment") {
  const Box box = Box::cube(0, 10, 1);
  DiffusivityField D;
  D.D = constant_field(0.4, box);
  DensityGrid g =
      DensityGrid::make(0, 10, 1000, Boundary::reflecting, Geometry::radial3d);
  const double w0 = 0.5;
  g.fill([=](double r) { return std::exp(-0.5 * r * r / (w0 * w0)); });
  g.normalize();
  // E|x|^2 of an isotropic cloud grows as 6 D t in three dimensions
  const Vec vol = g.volumes();
  auto second_moment = [&](const DensityGrid& gg) {
    KahanSum s;
    for (int i = 0; i <= gg.n; ++i)
      s.add(vol[i] * gg.rho[i] * gg.node(i) * gg.node(i));
    return s.value();
  };
  const double m2_0 = second_moment(g);
  const auto rep = solve_fick(D, g, 1.0, 1e-3);
  CHECK(rep.mass_drift < 1e-10);
  CHECK(rel_err(second_moment(rep.grid) - m2_0, 6.0 * 0.4 * 1.0) < 0.02);
}

TEST_CASE("discrete fick operator is self-adjoint in the volume inner product") {
  const auto dp = bump_1d();
  const DiffusivityField D = diffusivity_from(dp);
  const int n = 24;
  DensityGrid g = DensityGrid::make(-4, 4, n);
  const Vec vol = g.volumes();
  Mat L(n + 1, n + 1);
  for (int j = 0; j <= n; ++j) {
    g.rho = Vec::Zero(n + 1);
    g.rho[j] = 1.0;
    L.col(j) = fick_rhs(D, g);
  }
  const Mat M = vol.asDiagonal() * L;
  CHECK((M - M.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("solved density matches a reduced-SDE histogram") {
  const auto dp = bump_1d(1.0);
  const DiffusivityField D = diffusivity_from(dp);
  const Sde1d sde = brownian_limit_sde_1d(dp);

  const double s_end = 0.5, c0 = 0.0, w0 = 0.5;
  DensityGrid g = DensityGrid::make(-4, 4, 400);
  g.fill([=](double x) { return std::exp(-0.5 * (x - c0) * (x - c0) / (w0 * w0)); });
  g.normalize();
  const auto pde = solve_fick(D, g, s_end, s_end / 1000);

  const int n_paths = 20000, n_steps = 1000;
  const double dt = s_end / n_steps, sq = std::sqrt(dt);
  const int bins = 40;
  const double lo = -4, hi = 4, binw = (hi - lo) / bins;
  std::vector<long> counts(bins, 0);
  for (int p = 0; p < n_paths; ++p) {
    NormalSource init(909, p, kStreamThermal);
    NormalSource noise(909, p, kStreamWiener);
    double x = c0 + w0 * init();
    for (int k = 0; k < n_steps; ++k)
      x += sde.drift(x) * dt + sde.diffusion(x) * sq * noise();
    const int b = static_cast<int>(std::floor((x - lo) / binw));
    if (b >= 0 && b < bins) ++counts[b];
  }
  auto rho_at = [&](double x) {
    const double u = (x - lo) / pde.grid.h();
    const int i = std::min<int>(std::max(0, (int)std::floor(u)),
                                pde.grid.n - 1);
    const double f = u - i;
    return (1.0 - f) * pde.grid.rho[i] + f * pde.grid.rho[i + 1];
  };
  KahanSum l1;
  for (int b = 0; b < bins; ++b) {
    const double xc = lo + (b + 0.5) * binw;
    l1.add(std::abs(counts[b] / (n_paths * binw) - rho_at(xc)) * binw);
  }
  CHECK(l1.value() < 0.1);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(DensityGrid::make(0, 1, 1), InvalidGrid);
  CHECK_THROWS_AS(DensityGrid::make(0, 1, 32, Boundary::periodic,
                                    Geometry::radial3d),
                  BoundaryUnsupported);
  CHECK_THROWS_AS(DensityGrid::make(-1, 1, 32, Boundary::reflecting,
                                    Geometry::radial3d),
                  InvalidGrid);
}

}  // TEST_SUITE
