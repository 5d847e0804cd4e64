#pragma once

#include <functional>
#include <vector>

#include "fastslow/common.hpp"
#include "fastslow/fields.hpp"

namespace fastslow {

using MatrixFn = std::function<Mat(const Vec& x, double t)>;
using VectorFn = std::function<Vec(const Vec& x, double t)>;
// d/dx_j of a matrix-valued coefficient, entrywise.
using MatrixDerivFn = std::function<Mat(const Vec& x, double t, int j)>;

// Coupled fast-slow system
//   eps dy = (-A(x,t) y + F(x,t)) dt + B(x,t) dw
//      dx = (C(x,t) y + Q(x,t)) dt + P(x,t) dw
// with one m-dimensional Wiener process w driving both lines. Coefficient
// evaluation must be pure; instances are immutable after construction and
// safe to share across threads.
struct FastSlowSystem {
  int n_fast = 0;   // n
  int n_slow = 0;   // n'
  int m_noise = 0;  // m
  double eps = 0;

  MatrixFn A, B, C, P;
  VectorFn F, Q;

  // Analytic coefficient derivatives; empty means finite differences only.
  MatrixDerivFn dA, dC;

  // Set when the system has the isotropic diagonal structure A = a(x) I,
  // B = b(x) I, C = I, F = Q = P = 0 (the Brownian special case); enables the
  // scalar exact/joint OU integrators.
  FieldPtr iso_a, iso_b;
  bool is_iso_diagonal() const { return iso_a && iso_b; }
};

// Fast and/or slow states sampled along one realization.
struct Trajectory {
  std::vector<double> t;
  std::vector<Vec> slow;
  std::vector<Vec> fast;  // empty for reduced-equation runs
  bool aborted = false;   // overflow guard tripped; data valid up to abort
  std::size_t abort_step = 0;

  // Index of the recorded time s, or -1.
  int index_of(double s) const;
};

// Smallest eigenvalue of the symmetric part of A over a grid on the box
// (and the given times). Throws StabilityViolation if the minimum is <= 0.
double verify_stability(const FastSlowSystem& sys, const Box& domain_box,
                        int grid_density,
                        const std::vector<double>& t_samples = {0.0});

// Largest eigenvalue of the symmetric part of A over the same sampling;
// used by explicit-Euler step-size bounds.
double stability_upper(const FastSlowSystem& sys, const Box& domain_box,
                       int grid_density,
                       const std::vector<double>& t_samples = {0.0});

// eps du = -eta(y) u ds + sigma(y) dw,  dy = u ds   (n = n' = m = field dim).
FastSlowSystem make_brownian_system(FieldPtr eta, FieldPtr sigma, double eps);

}  // namespace fastslow
