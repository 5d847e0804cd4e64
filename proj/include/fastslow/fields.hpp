#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "fastslow/common.hpp"
#include "fastslow/errors.hpp"

namespace fastslow {

// Axis-aligned box; declared domain over which sup/inf constants are taken.
struct Box {
  Vec lo, hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& y) const;
  Vec widths() const { return hi - lo; }
  double diameter() const { return (hi - lo).norm(); }
  Vec center() const { return 0.5 * (lo + hi); }

  static Box cube(double lo, double hi, int dim);
};

bool operator==(const Box& a, const Box& b);

// Smooth scalar field on a declared domain box. Families used for viscosity
// profiles are strictly positive and bounded together with their first and
// second derivatives on the box; analytic derivatives are provided where the
// family admits them, otherwise gradient()/hessian() throw
// GradientUnavailable.
class ScalarField {
 public:
  virtual ~ScalarField() = default;

  virtual int dim() const = 0;
  virtual const Box& domain() const = 0;
  virtual double value(const Vec& y) const = 0;

  virtual bool has_analytic_gradient() const { return false; }
  virtual Vec gradient(const Vec& y) const;
  virtual Mat hessian(const Vec& y) const;
};

using FieldPtr = std::shared_ptr<const ScalarField>;

// Named families (the closed set the CLI exposes).
FieldPtr constant_field(double value, Box box);
// base + amplitude * exp(-|y - center|^2 / (2 width^2))
FieldPtr gaussian_bump_field(Vec center, double width, double base,
                             double amplitude, Box box);
// Viscosity dip: 1 - (1 - floor) exp(-|y - center|^2 / (2 width^2)),
// range (floor, 1]; floor in (0, 1].
FieldPtr gaussian_dip_field(Vec center, double width, double floor, Box box);
// lo + (hi - lo) * logistic((direction . y - offset) / width)
FieldPtr smooth_ramp_field(Vec direction, double offset, double width,
                           double lo, double hi, Box box);
FieldPtr product_field(std::vector<FieldPtr> factors);

// Library-level combinators and the extension point for user callables.
FieldPtr scaled_field(double c, FieldPtr f);
FieldPtr power_field(FieldPtr f, double p);  // requires f > 0 on the box
FieldPtr sqrt_field(FieldPtr f);
FieldPtr reciprocal_field(FieldPtr f);
FieldPtr arg_scaled_field(FieldPtr f, double a);  // y -> f(a*y)
// 1-D restriction t -> f(base + t e_axis).
FieldPtr slice_field(FieldPtr f, int axis, Vec base);
FieldPtr callable_field(Box box, std::function<double(const Vec&)> value,
                        std::function<Vec(const Vec&)> grad = {},
                        std::function<Mat(const Vec&)> hess = {});

// Uniform grid scan over the box, endpoints included, per_axis >= 2.
void for_each_grid_point(const Box& box, int per_axis,
                         const std::function<void(const Vec&)>& fn);
double field_min_on(const ScalarField& f, const Box& box, int per_axis);
double field_max_on(const ScalarField& f, const Box& box, int per_axis);

}  // namespace fastslow
