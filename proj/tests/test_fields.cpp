#include <doctest.h>

#include "fastslow/errors.hpp"
#include "fastslow/fields.hpp"
#include "test_util.hpp"

using namespace fastslow;
using test::fd_gradient;
using test::fd_jacobian;
using test::random_point;

namespace {

void check_derivatives(const FieldPtr& f, const Vec& y, double tol = 5e-8) {
  auto val = [&](const Vec& p) { return f->value(p); };
  auto grad = [&](const Vec& p) { return f->gradient(p); };
  CHECK((f->gradient(y) - fd_gradient(val, y)).norm() < tol);
  CHECK((f->hessian(y) - fd_jacobian(grad, y)).norm() < tol);
}

}  // namespace

TEST_SUITE("fields") {

TEST_CASE("constant field") {
  const Box box = Box::cube(-1, 1, 3);
  const auto f = constant_field(2.5, box);
  const Vec y = random_point(box, 1, 0);
  CHECK(f->value(y) == 2.5);
  CHECK(f->gradient(y).norm() == 0.0);
  CHECK(f->hessian(y).norm() == 0.0);
}

TEST_CASE("gaussian dip shape and derivatives") {
  const Box box = Box::cube(-1, 1, 3);
  const auto f = gaussian_dip_field(Vec::Zero(3), 0.5, 0.3, box);
  CHECK(f->value(Vec::Zero(3)) == doctest::Approx(0.3));
  CHECK(f->value(Vec::Constant(3, 50.0)) == doctest::Approx(1.0));
  for (int k = 0; k < 5; ++k) check_derivatives(f, random_point(box, 2, k));
  // strictly positive and <= 1 on the box
  CHECK(field_min_on(*f, box, 17) > 0.0);
  CHECK(field_max_on(*f, box, 17) <= 1.0);
}

TEST_CASE("smooth ramp shape and derivatives") {
  const Box box = Box::cube(-2, 2, 2);
  Vec d(2);
  d << 1, 1;
  const auto f = smooth_ramp_field(d, 0.0, 0.4, 0.5, 1.0, box);
  CHECK(f->value(Vec::Constant(2, -100.0)) == doctest::Approx(0.5));
  CHECK(f->value(Vec::Constant(2, 100.0)) == doctest::Approx(1.0));
  for (int k = 0; k < 5; ++k) check_derivatives(f, random_point(box, 3, k));
}

TEST_CASE("product field") {
  const Box box = Box::cube(-1, 1, 2);
  const auto a = gaussian_dip_field(Vec::Zero(2), 0.8, 0.5, box);
  Vec d(2);
  d << 1, 0;
  const auto b = smooth_ramp_field(d, 0.1, 0.5, 0.6, 1.0, box);
  const auto p = product_field({a, b});
  const Vec y = random_point(box, 4, 0);
  CHECK(p->value(y) == doctest::Approx(a->value(y) * b->value(y)));
  for (int k = 0; k < 5; ++k) check_derivatives(p, random_point(box, 5, k));

  const auto other = constant_field(1.0, Box::cube(-2, 2, 2));
  CHECK_THROWS_AS(product_field({a, other}), DomainMismatch);
}

TEST_CASE("power, sqrt and reciprocal") {
  const Box box = Box::cube(-1, 1, 3);
  const auto f = gaussian_dip_field(Vec::Zero(3), 0.7, 0.4, box);
  const Vec y = random_point(box, 6, 1);
  CHECK(sqrt_field(f)->value(y) == doctest::Approx(std::sqrt(f->value(y))));
  CHECK(reciprocal_field(f)->value(y) == doctest::Approx(1.0 / f->value(y)));
  check_derivatives(sqrt_field(f), y);
  check_derivatives(reciprocal_field(f), y);
  check_derivatives(power_field(f, -2.0), y, 5e-7);
  check_derivatives(scaled_field(3.5, f), y);
}

TEST_CASE("argument scaling maps the box") {
  const Box box = Box::cube(-2, 2, 2);
  const auto f = gaussian_dip_field(Vec::Zero(2), 0.9, 0.5, box);
  const auto g = arg_scaled_field(f, 4.0);  // g(y) = f(4y)
  CHECK(g->domain().lo[0] == doctest::Approx(-0.5));
  CHECK(g->domain().hi[0] == doctest::Approx(0.5));
  const Vec y = Vec::Constant(2, 0.1);
  CHECK(g->value(y) == doctest::Approx(f->value((4.0 * y).eval())));
  check_derivatives(g, y);
}

TEST_CASE("slice restricts to an axis") {
  const Box box = Box::cube(-1, 1, 3);
  const auto f = gaussian_dip_field(Vec::Zero(3), 0.7, 0.4, box);
  Vec base = Vec::Zero(3);
  base[1] = 0.3;
  const auto s = slice_field(f, 0, base);
  CHECK(s->dim() == 1);
  Vec t = Vec::Constant(1, 0.2);
  Vec lifted = base;
  lifted[0] = 0.2;
  CHECK(s->value(t) == doctest::Approx(f->value(lifted)));
  CHECK(s->gradient(t)[0] == doctest::Approx(f->gradient(lifted)[0]));
}

TEST_CASE("callable field extension point") {
  const Box box = Box::cube(0.5, 2, 1);
  const auto f = callable_field(
      box, [](const Vec& y) { return y[0] * y[0]; });
  CHECK(f->value(Vec::Constant(1, 1.5)) == doctest::Approx(2.25));
  CHECK_FALSE(f->has_analytic_gradient());
  CHECK_THROWS_AS(f->gradient(Vec::Constant(1, 1.0)), GradientUnavailable);

  const auto g = callable_field(
      box, [](const Vec& y) { return y[0] * y[0]; },
      [](const Vec& y) { return Vec::Constant(1, 2.0 * y[0]); });
  CHECK(g->has_analytic_gradient());
  CHECK(g->gradient(Vec::Constant(1, 1.5))[0] == doctest::Approx(3.0));
}

TEST_CASE("grid scan hits endpoints and extremes") {
  const Box box = Box::cube(-1, 1, 2);
  int count = 0;
  bool corner = false;
  for_each_grid_point(box, 5, [&](const Vec& y) {
    ++count;
    corner = corner || (y[0] == -1.0 && y[1] == -1.0);
  });
  CHECK(count == 25);
  CHECK(corner);

  const auto f = gaussian_dip_field(Vec::Zero(2), 0.5, 0.3, box);
  CHECK(field_min_on(*f, box, 9) == doctest::Approx(0.3));
  CHECK_THROWS_AS(for_each_grid_point(box, 1, [](const Vec&) {}),
                  InvalidGrid);
}

TEST_CASE("purity: repeated evaluation identical") {
  const Box box = Box::cube(-1, 1, 3);
  const auto f = gaussian_dip_field(Vec::Zero(3), 0.6, 0.4, box);
  const Vec y = random_point(box, 7, 2);
  CHECK(f->value(y) == f->value(y));
  CHECK(f->gradient(y) == f->gradient(y));
  CHECK(f->hessian(y) == f->hessian(y));
}

}  // TEST_SUITE
