#include <doctest.h>

#include "fastslow/errors.hpp"
#include "fastslow/system.hpp"
#include "test_util.hpp"

using namespace fastslow;
using test::random_point;

namespace {

// Minimal system with a fixed A matrix; other coefficients inert.
FastSlowSystem system_with_A(Mat a) {
  const int n = static_cast<int>(a.rows());
  FastSlowSystem sys;
  sys.n_fast = n;
  sys.n_slow = n;
  sys.m_noise = n;
  sys.eps = 0.1;
  sys.A = [a](const Vec&, double) { return a; };
  sys.B = [n](const Vec&, double) { return Mat::Identity(n, n); };
  sys.C = [n](const Vec&, double) { return Mat::Identity(n, n); };
  sys.P = [n](const Vec&, double) { return Mat::Zero(n, n); };
  sys.F = [n](const Vec&, double) { return Vec::Zero(n); };
  sys.Q = [n](const Vec&, double) { return Vec::Zero(n); };
  return sys;
}

}  // namespace

TEST_SUITE("system") {

TEST_CASE("stability margin of the identity") {
  const auto sys = system_with_A(Mat::Identity(3, 3));
  CHECK(verify_stability(sys, Box::cube(-1, 1, 3), 3) == doctest::Approx(1.0));
}

TEST_CASE("stability margin of a diagonal matrix") {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 2.0;
  a(1, 1) = 5.0;
  const auto sys = system_with_A(a);
  CHECK(verify_stability(sys, Box::cube(-1, 1, 2), 3) == doctest::Approx(2.0));
  CHECK(stability_upper(sys, Box::cube(-1, 1, 2), 3) == doctest::Approx(5.0));
}

TEST_CASE("stability margin of a bump viscosity equals its grid minimum") {
  const Box box = Box::cube(-1, 1, 3);
  const auto eta = gaussian_dip_field(Vec::Zero(3), 0.5, 0.3, box);
  const auto sys =
      make_brownian_system(eta, sqrt_field(scaled_field(2.0, eta)), 0.01);
  const double gamma = verify_stability(sys, box, 9);
  // brute-force minimum over a much finer grid
  const double brute = field_min_on(*eta, box, 41);
  CHECK(gamma == doctest::Approx(brute).epsilon(1e-6));
  CHECK(gamma == doctest::Approx(0.3));
}

TEST_CASE("non-positive symmetric part is rejected") {
  Mat a = Mat::Identity(2, 2);
  a(1, 1) = -0.1;
  const auto sys = system_with_A(a);
  CHECK_THROWS_AS(verify_stability(sys, Box::cube(-1, 1, 2), 3),
                  StabilityViolation);
}

TEST_CASE("brownian construction: constant fields") {
  const Box box = Box::cube(-1, 1, 3);
  const auto sys = make_brownian_system(constant_field(1.0, box),
                                        constant_field(1.0, box), 0.1);
  CHECK(sys.n_fast == 3);
  CHECK(sys.n_slow == 3);
  CHECK(sys.m_noise == 3);
  const Vec y = random_point(box, 11, 0);
  CHECK(sys.A(y, 0.0) == Mat::Identity(3, 3));
  CHECK(sys.B(y, 0.0) == Mat::Identity(3, 3));
  CHECK(sys.Q(y, 0.0).norm() == 0.0);
  CHECK(sys.P(y, 0.0).norm() == 0.0);
  CHECK(sys.is_iso_diagonal());
}

TEST_CASE("brownian construction: bump viscosity on random points") {
  const Box box = Box::cube(-1, 1, 3);
  const auto eta = gaussian_dip_field(Vec::Zero(3), 0.6, 0.4, box);
  const auto sigma = sqrt_field(scaled_field(3.0, eta));
  const auto sys = make_brownian_system(eta, sigma, 1e-3);
  for (int k = 0; k < 10; ++k) {
    const Vec y = random_point(box, 12, k);
    const Mat a = sys.A(y, 0.0);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        CHECK(a(i, j) == doctest::Approx(i == j ? eta->value(y) : 0.0));
    CHECK(sys.B(y, 0.0)(1, 1) == doctest::Approx(sigma->value(y)));
  }
  // coefficient evaluation is pure
  const Vec y = random_point(box, 12, 99);
  CHECK(sys.A(y, 0.0) == sys.A(y, 0.0));
}

TEST_CASE("brownian construction rejects mismatched domains") {
  const auto eta = constant_field(1.0, Box::cube(-1, 1, 3));
  const auto sigma = constant_field(1.0, Box::cube(-2, 2, 3));
  CHECK_THROWS_AS(make_brownian_system(eta, sigma, 0.1), DomainMismatch);
  const auto ok = constant_field(1.0, Box::cube(-1, 1, 3));
  CHECK_THROWS_AS(make_brownian_system(eta, ok, -1.0), DomainMismatch);
}

TEST_CASE("trajectory time lookup") {
  Trajectory tr;
  tr.t = {0.0, 0.1, 0.2};
  tr.slow = {Vec::Zero(1), Vec::Zero(1), Vec::Zero(1)};
  CHECK(tr.index_of(0.1) == 1);
  CHECK(tr.index_of(0.15) == -1);
}

}  // TEST_SUITE
