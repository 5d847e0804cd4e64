#pragma once

#include <functional>
#include <span>

#include "fastslow/brownian.hpp"
#include "fastslow/common.hpp"
#include "fastslow/fields.hpp"

namespace fastslow {

enum class Boundary { reflecting, periodic };
enum class Geometry { cartesian1d, radial3d };
enum class FaceAverage { arithmetic, harmonic };

// Node-centered 1-D (or radial) mesh with n cells / n+1 nodes and a density
// value per node. Boundary control volumes are half cells, so the discrete
// mass is the trapezoidal rule (shell volumes in radial geometry).
struct DensityGrid {
  double lo = 0, hi = 0;
  int n = 0;
  Boundary boundary = Boundary::reflecting;
  Geometry geometry = Geometry::cartesian1d;
  Vec rho;

  double h() const { return (hi - lo) / n; }
  double node(int i) const { return lo + i * h(); }
  Vec volumes() const;
  double mass() const;

  static DensityGrid make(double lo, double hi, int n,
                          Boundary b = Boundary::reflecting,
                          Geometry g = Geometry::cartesian1d);
  void fill(const std::function<double(double)>& f);
  void normalize();  // scale to unit mass
};

// 1-D reduction of the limit SDE: dx = drift dt + diffusion dw.
struct Sde1d {
  std::function<double(double)> drift;
  std::function<double(double)> diffusion;
  const void* provenance = nullptr;
};

// D(x) > 0 with gradient; Fick operator coefficient.
struct DiffusivityField {
  FieldPtr D;
  const void* provenance = nullptr;

  double value(double x) const;
  double grad(double x) const;
};

// Forward Kolmogorov RHS of the 1-D reduction in conservative flux form:
// d rho/dt = d/dx [ -q0 rho + d/dx (S rho) ],  S = c0^2 / 2.
Vec kolmogorov_rhs(const Sde1d& sde, const DensityGrid& grid);

// Fick RHS d/dx (D d rho/dx), flux form with face diffusivity from the
// chosen average.
Vec fick_rhs(const DiffusivityField& D, const DensityGrid& grid,
             FaceAverage avg = FaceAverage::arithmetic);

// Max pointwise |kolmogorov - fick| over a suite of smooth test densities;
// vanishes at O(h^2) when both sides come from one viscosity field. Throws
// FieldMismatch when the two sides were built from different fields.
double operator_equivalence_check(
    const Sde1d& sde, const DiffusivityField& D,
    std::span<const std::function<double(double)>> rho_samples,
    DensityGrid grid_spec);
double operator_equivalence_check(
    const DimensionlessParams& dp,
    std::span<const std::function<double(double)>> rho_samples,
    DensityGrid grid_spec);

// Radial/axis profile of the dimensionless reduced equation (1-D fields).
Sde1d brownian_limit_sde_1d(const DimensionlessParams& dp);

// Dimensionless D(y) = sigma_bar^2 / (2 eta(y)).
DiffusivityField diffusivity_from(const DimensionlessParams& dp);
// Physical D(x) = kB T0 / (6 pi mu(x) r).
DiffusivityField diffusivity_from(const PhysicalParams& p);

struct FickSolveReport {
  DensityGrid grid;       // final density
  double mass_drift = 0;  // |mass_end - mass_0| / mass_0
  double min_rho = 0;     // most negative value seen before clipping
  long clipped = 0;       // nodes clipped to zero across all steps
};

// Trapezoidal (Crank-Nicolson) time stepping of d rho/dt = fick operator;
// unconditionally stable, mass-conserving in exact arithmetic.
FickSolveReport solve_fick(const DiffusivityField& D, DensityGrid rho0,
                           double t_end, double dt,
                           FaceAverage avg = FaceAverage::arithmetic);

}  // namespace fastslow
