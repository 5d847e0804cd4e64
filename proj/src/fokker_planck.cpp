#include "fastslow/fokker_planck.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "fastslow/errors.hpp"
#include "fastslow/numeric.hpp"

namespace fastslow {

namespace {

double face_weight(const DensityGrid& g, double x) {
  return g.geometry == Geometry::radial3d ? x * x : 1.0;
}

int active_nodes(const DensityGrid& g) {
  return g.boundary == Boundary::periodic ? g.n : g.n + 1;
}

void check_grid(const DensityGrid& g) {
  if (g.n < 2 || !(g.hi > g.lo)) throw InvalidGrid("degenerate density grid");
  if (g.rho.size() != g.n + 1)
    throw InvalidGrid("density grid needs n+1 nodal values");
  if (g.geometry == Geometry::radial3d) {
    if (g.lo < 0) throw InvalidGrid("radial grid needs lo >= 0");
    if (g.boundary == Boundary::periodic)
      throw BoundaryUnsupported("periodic radial grid not supported");
  }
}

}  // namespace

Vec DensityGrid::volumes() const {
  Vec v(n + 1);
  const double hh = h();
  if (geometry == Geometry::cartesian1d) {
    v.setConstant(hh);
    if (boundary == Boundary::reflecting) {
      v[0] = 0.5 * hh;
      v[n] = 0.5 * hh;
    }
  } else {
    // Shell volumes (without the 4 pi factor) between face radii.
    for (int i = 0; i <= n; ++i) {
      const double rm = i == 0 ? node(0) : node(i) - 0.5 * hh;
      const double rp = i == n ? node(n) : node(i) + 0.5 * hh;
      v[i] = (rp * rp * rp - rm * rm * rm) / 3.0;
    }
  }
  return v;
}

double DensityGrid::mass() const {
  const Vec v = volumes();
  KahanSum m;
  const int last = boundary == Boundary::periodic ? n - 1 : n;
  for (int i = 0; i <= last; ++i) m.add(v[i] * rho[i]);
  return m.value();
}

DensityGrid DensityGrid::make(double lo, double hi, int n, Boundary b,
                              Geometry g) {
  DensityGrid grid;
  grid.lo = lo;
  grid.hi = hi;
  grid.n = n;
  grid.boundary = b;
  grid.geometry = g;
  grid.rho = Vec::Zero(n + 1);
  check_grid(grid);
  return grid;
}

void DensityGrid::fill(const std::function<double(double)>& f) {
  for (int i = 0; i <= n; ++i) rho[i] = f(node(i));
  if (boundary == Boundary::periodic) rho[n] = rho[0];
}

void DensityGrid::normalize() {
  const double m = mass();
  if (!(m > 0)) throw InvalidGrid("cannot normalize non-positive mass");
  rho /= m;
}

double DiffusivityField::value(double x) const {
  return D->value(Vec::Constant(1, x));
}

double DiffusivityField::grad(double x) const {
  return D->gradient(Vec::Constant(1, x))[0];
}

namespace {

// Divergence of fluxes given at the n interior faces (plus the wrap face for
// periodic grids). Boundary faces carry zero flux under reflection.
Vec flux_divergence(const DensityGrid& g, const std::vector<double>& flux) {
  const Vec vol = g.volumes();
  Vec rhs = Vec::Zero(g.n + 1);
  if (g.boundary == Boundary::reflecting) {
    for (int i = 0; i <= g.n; ++i) {
      const double fp = i == g.n ? 0.0 : flux[i];
      const double fm = i == 0 ? 0.0 : flux[i - 1];
      rhs[i] = (fp - fm) / vol[i];
    }
  } else {
    for (int i = 0; i < g.n; ++i) {
      const double fp = flux[i];
      const double fm = i == 0 ? flux[g.n - 1] : flux[i - 1];
      rhs[i] = (fp - fm) / vol[i];
    }
    rhs[g.n] = rhs[0];
  }
  return rhs;
}

}  // namespace

Vec kolmogorov_rhs(const Sde1d& sde, const DensityGrid& grid) {
  check_grid(grid);
  const double h = grid.h();
  std::vector<double> S(grid.n + 1), q(grid.n + 1);
  for (int i = 0; i <= grid.n; ++i) {
    const double x = grid.node(i);
    const double c = sde.diffusion(x);
    S[i] = 0.5 * c * c;
    q[i] = sde.drift(x);
  }
  // Face flux -q rho + d(S rho)/dx.
  std::vector<double> flux(grid.n);
  for (int f = 0; f < grid.n; ++f) {
    const int i = f, j = f + 1;
    const double xf = grid.lo + (f + 0.5) * h;
    const double qf = 0.5 * (q[i] + q[j]);
    const double rf = 0.5 * (grid.rho[i] + grid.rho[j]);
    const double dSr = (S[j] * grid.rho[j] - S[i] * grid.rho[i]) / h;
    flux[f] = face_weight(grid, xf) * (-qf * rf + dSr);
  }
  return flux_divergence(grid, flux);
}

Vec fick_rhs(const DiffusivityField& D, const DensityGrid& grid,
             FaceAverage avg) {
  check_grid(grid);
  const double h = grid.h();
  std::vector<double> d(grid.n + 1);
  for (int i = 0; i <= grid.n; ++i) d[i] = D.value(grid.node(i));
  std::vector<double> flux(grid.n);
  for (int f = 0; f < grid.n; ++f) {
    const int i = f, j = f + 1;
    const double xf = grid.lo + (f + 0.5) * h;
    const double df = avg == FaceAverage::arithmetic
                          ? 0.5 * (d[i] + d[j])
                          : 2.0 * d[i] * d[j] / (d[i] + d[j]);
    flux[f] = face_weight(grid, xf) * df * (grid.rho[j] - grid.rho[i]) / h;
  }
  return flux_divergence(grid, flux);
}

Sde1d brownian_limit_sde_1d(const DimensionlessParams& dp) {
  if (!dp.eta_field || dp.eta_field->dim() != 1)
    throw DomainMismatch("1-D reduction needs 1-D fields");
  const LimitSde sde = brownian_limit_sde(dp);
  Sde1d out;
  out.drift = [sde](double x) { return sde.drift(Vec::Constant(1, x), 0.0)[0]; };
  out.diffusion = [sde](double x) {
    return sde.diffusion(Vec::Constant(1, x), 0.0)(0, 0);
  };
  out.provenance = sde.provenance;
  return out;
}

DiffusivityField diffusivity_from(const DimensionlessParams& dp) {
  if (!dp.eta_field) throw DomainMismatch("dimensionless params missing eta");
  DiffusivityField f;
  f.D = scaled_field(0.5 * dp.sigma_bar_sq, reciprocal_field(dp.eta_field));
  f.provenance = dp.eta_field.get();
  return f;
}

DiffusivityField diffusivity_from(const PhysicalParams& p) {
  if (!p.mu_field) throw DomainMismatch("physical params missing mu");
  DiffusivityField f;
  f.D = scaled_field(p.kB * p.T0 / (6.0 * std::numbers::pi * p.r),
                     reciprocal_field(p.mu_field));
  f.provenance = p.mu_field.get();
  return f;
}

double operator_equivalence_check(
    const Sde1d& sde, const DiffusivityField& D,
    std::span<const std::function<double(double)>> rho_samples,
    DensityGrid grid_spec) {
  if (sde.provenance != D.provenance)
    throw FieldMismatch(
        "Kolmogorov and Fick sides built from different viscosity fields");
  double worst = 0.0;
  for (const auto& f : rho_samples) {
    grid_spec.fill(f);
    const Vec k = kolmogorov_rhs(sde, grid_spec);
    const Vec d = fick_rhs(D, grid_spec);
    worst = std::max(worst, (k - d).cwiseAbs().maxCoeff());
  }
  return worst;
}

double operator_equivalence_check(
    const DimensionlessParams& dp,
    std::span<const std::function<double(double)>> rho_samples,
    DensityGrid grid_spec) {
  return operator_equivalence_check(brownian_limit_sde_1d(dp),
                                    diffusivity_from(dp), rho_samples,
                                    std::move(grid_spec));
}

namespace {

// Tridiagonal (optionally cyclic) solve; the Crank-Nicolson matrices here are
// strictly diagonally dominant, so elimination without pivoting is safe.
Vec solve_tridiag(std::vector<double> a, std::vector<double> b,
                  std::vector<double> c, Vec rhs) {
  const int n = static_cast<int>(rhs.size());
  for (int i = 1; i < n; ++i) {
    if (b[i - 1] == 0.0) throw NonConvergedLinearSolve("zero pivot");
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  if (b[n - 1] == 0.0) throw NonConvergedLinearSolve("zero pivot");
  Vec x(n);
  x[n - 1] = rhs[n - 1] / b[n - 1];
  for (int i = n - 2; i >= 0; --i) x[i] = (rhs[i] - c[i] * x[i + 1]) / b[i];
  if (!x.allFinite()) throw NonConvergedLinearSolve("non-finite solution");
  return x;
}

// Sherman-Morrison for the cyclic case.
Vec solve_cyclic_tridiag(const std::vector<double>& a,
                         const std::vector<double>& b,
                         const std::vector<double>& c, double corner_lo,
                         double corner_hi, const Vec& rhs) {
  const int n = static_cast<int>(rhs.size());
  // A = A' + u v^T with u = (gamma, 0,..., corner_hi),
  // v = (1, 0,..., corner_lo/gamma).
  const double gamma = -b[0];
  std::vector<double> bb = b;
  bb[0] -= gamma;
  bb[n - 1] -= corner_lo * corner_hi / gamma;
  Vec u = Vec::Zero(n);
  u[0] = gamma;
  u[n - 1] = corner_hi;
  Vec y = solve_tridiag(a, bb, c, rhs);
  Vec z = solve_tridiag(a, bb, c, u);
  const double fact =
      (y[0] + corner_lo * y[n - 1] / gamma) /
      (1.0 + z[0] + corner_lo * z[n - 1] / gamma);
  return y - fact * z;
}

}  // namespace

FickSolveReport solve_fick(const DiffusivityField& D, DensityGrid rho0,
                           double t_end, double dt, FaceAverage avg) {
  check_grid(rho0);
  if (!(t_end > 0) || !(dt > 0))
    throw InvalidGrid("solve_fick needs positive t_end and dt");
  const long n_steps = std::max<long long>(
      1, std::llround(std::ceil(t_end / dt - 1e-12)));
  const double step = t_end / static_cast<double>(n_steps);

  const int na = active_nodes(rho0);
  const double h = rho0.h();
  const Vec vol = rho0.volumes();

  // Face conductances g_f = w_f D_f / h.
  std::vector<double> gf(rho0.n);
  std::vector<double> d(rho0.n + 1);
  for (int i = 0; i <= rho0.n; ++i) d[i] = D.value(rho0.node(i));
  for (int f = 0; f < rho0.n; ++f) {
    const double xf = rho0.lo + (f + 0.5) * h;
    const double df = avg == FaceAverage::arithmetic
                          ? 0.5 * (d[f] + d[f + 1])
                          : 2.0 * d[f] * d[f + 1] / (d[f] + d[f + 1]);
    gf[f] = face_weight(rho0, xf) * df / h;
  }

  // Operator T: (T rho)_i = g_{i+1/2}(rho_{i+1}-rho_i) - g_{i-1/2}(rho_i-rho_{i-1}),
  // with zero boundary flux (reflecting) or wrap (periodic).
  const bool periodic = rho0.boundary == Boundary::periodic;
  std::vector<double> sub(na, 0.0), diag(na, 0.0), sup(na, 0.0);
  double corner_lo = 0.0, corner_hi = 0.0;  // T(0, na-1), T(na-1, 0)
  for (int i = 0; i < na; ++i) {
    const double gp = i < rho0.n ? gf[i] : 0.0;
    const double gm = i > 0 ? gf[i - 1] : (periodic ? gf[rho0.n - 1] : 0.0);
    const double gplus = periodic && i == na - 1 ? gf[na - 1] : gp;
    diag[i] = -(gplus + gm);
    if (i + 1 < na) sup[i] = gp;
    if (i > 0) sub[i] = gf[i - 1];
  }
  if (periodic) {
    corner_lo = gf[rho0.n - 1];  // node 0 couples to node n-1 through the wrap
    corner_hi = gf[rho0.n - 1];
  }

  const double mass0 = rho0.mass();
  FickSolveReport rep;
  rep.min_rho = 0.0;

  Vec rho(na);
  for (int i = 0; i < na; ++i) rho[i] = rho0.rho[i];

  auto apply_T = [&](const Vec& v) {
    Vec out(na);
    for (int i = 0; i < na; ++i) {
      double acc = diag[i] * v[i];
      if (i + 1 < na) acc += sup[i] * v[i + 1];
      if (i > 0) acc += sub[i] * v[i - 1];
      if (periodic) {
        if (i == 0) acc += corner_lo * v[na - 1];
        if (i == na - 1) acc += corner_hi * v[0];
      }
      out[i] = acc;
    }
    return out;
  };

  // (diag(vol) - dt/2 T) rho' = (diag(vol) + dt/2 T) rho
  std::vector<double> la(na), lb(na), lc(na);
  for (int i = 0; i < na; ++i) {
    la[i] = -0.5 * step * sub[i];
    lb[i] = vol[i] - 0.5 * step * diag[i];
    lc[i] = -0.5 * step * sup[i];
  }
  const double ccl = -0.5 * step * corner_lo;
  const double cch = -0.5 * step * corner_hi;

  for (long k = 0; k < n_steps; ++k) {
    Vec rhs = apply_T(rho);
    for (int i = 0; i < na; ++i) rhs[i] = vol[i] * rho[i] + 0.5 * step * rhs[i];
    rho = periodic ? solve_cyclic_tridiag(la, lb, lc, ccl, cch, rhs)
                   : solve_tridiag(la, lb, lc, rhs);
    for (int i = 0; i < na; ++i) {
      if (rho[i] < 0.0) {
        rep.min_rho = std::min(rep.min_rho, rho[i]);
        rho[i] = 0.0;
        ++rep.clipped;
      }
    }
  }

  for (int i = 0; i < na; ++i) rho0.rho[i] = rho[i];
  if (periodic) rho0.rho[rho0.n] = rho0.rho[0];
  rep.mass_drift = std::abs(rho0.mass() - mass0) / std::abs(mass0);
  rep.grid = std::move(rho0);
  return rep;
}

}  // namespace fastslow
