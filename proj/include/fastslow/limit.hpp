#pragma once

#include <functional>

#include "fastslow/common.hpp"
#include "fastslow/system.hpp"

namespace fastslow {

enum class GradientMode {
  automatic,          // analytic when the system provides dA and dC
  analytic,           // require dA/dC, throw GradientUnavailable otherwise
  finite_difference,  // central differences, h = cbrt(eps_mach) * (1 + |x_j|)
};

// Reduced slow-variable SDE  dx = q0(x,t) dt + C0(x,t) dw. The coefficient
// formulas contain no eps; two systems differing only in eps reduce
// identically.
struct LimitSde {
  int dim = 0;       // n'
  int m_noise = 0;   // m
  std::function<Vec(const Vec&, double)> drift;      // q0
  std::function<Mat(const Vec&, double)> diffusion;  // C0
  // Identity of the field the coefficients were built from, for dual-route
  // consistency checks. Null for generic systems.
  const void* provenance = nullptr;
};

// C0(x,t) = C A^{-1} B + P.
Mat limit_diffusion(const FastSlowSystem& sys, const Vec& x, double t);

// q0_i = (C A^{-1} F)_i + Q_i
//        + sum_{j,k,l} P_{jk} B_{lk} d/dx_j (C A^{-1})_{il}
//        + sum_{j,l,l'} C_{jl} S_{ll'} d/dx_j (C A^{-1})_{il'}
// with S the stationary Lyapunov solution of A S + S A^T = B B^T.
// fd_h > 0 overrides the default finite-difference step.
Vec limit_drift(const FastSlowSystem& sys, const Vec& x, double t,
                GradientMode mode = GradientMode::automatic, double fd_h = 0.0);

// Packages limit_drift / limit_diffusion as evaluatable fields. Callers are
// expected to have run verify_stability on the source system; evaluation
// propagates SingularA / UnstableA lazily.
LimitSde reduce_system(const FastSlowSystem& sys,
                       GradientMode mode = GradientMode::automatic);

}  // namespace fastslow
