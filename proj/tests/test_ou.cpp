#include <doctest.h>

#include <cmath>

#include "fastslow/errors.hpp"
#include "fastslow/numeric.hpp"
#include "fastslow/ou.hpp"
#include "fastslow/rng.hpp"
#include "test_util.hpp"

using namespace fastslow;
using test::rel_err;

TEST_SUITE("ou") {

TEST_CASE("step moments match high-precision references") {
  // mpmath (50 digits), columns g0, g1, g2, g3, g4; with a = theta, dt = 1
  // the moments equal the kernels directly.
  struct Row {
    double theta, g0, g1, g2, g3, g4;
  };
  const Row rows[] = {
      {1e-8, 0.9999999950000000166667, 0.9999999900000000666667,
       0.4999999983333333375, 0.333333330833333345, 0.4999999950000000291667},
      {1e-3, 0.9995001666250083319446, 0.9990006663334666222349,
       0.4998333749916680553572, 0.3330834499583456317963,
       0.4995002915417097097254},
      {0.05, 0.9754115099857198181715, 0.9516258196404042683575,
       0.4917698002856036365701, 0.3211198675858528058089,
       0.4757138069063109962797},
      {0.2, 0.9063462346100907066503, 0.8241998849109017481389,
       0.4682688269495464667484, 0.2876853922680083709568,
       0.410731748495944792557},
      {0.25, 0.8847968677143805270193, 0.7869386805747331527924,
       0.4608125291424778919227, 0.2775191223355535800602,
       0.3914327485585894969077},
      {0.3, 0.8639392643942737797771, 0.7519806065099559456192,
       0.4535357853524207340764, 0.2678008635712042896118,
       0.3731955262810594471928},
      {1.0, 0.6321205588285576784045, 0.432332358381693654053,
       0.3678794411714423215955, 0.168091240724578297244,
       0.1997882004468640243515},
      {5.0, 0.1986524106001829065807, 0.09999546000702375151485,
       0.1602695178799634186839, 0.02810762555226631753414,
       0.01973139011863183101317},
      {40.0, 0.02499999999999999989379, 0.0125, 0.02437500000000000000266,
       0.0006015625000000000001328, 0.0003124999999999999973448},
  };
  for (const Row& r : rows) {
    const auto m = ou_step_moments(r.theta, 1.0);
    CHECK(rel_err(m.relax, r.g0) < 1e-12);
    CHECK(rel_err(m.var_u, r.g1) < 1e-12);
    CHECK(rel_err(m.cov_uw, r.g0) < 1e-12);
    CHECK(rel_err(m.cov_yw, r.g2) < 1e-12);
    CHECK(rel_err(m.var_y, r.g3) < 1e-12);
    CHECK(rel_err(m.cov_uy, r.g4) < 1e-12);
    CHECK(rel_err(m.decay, std::exp(-r.theta)) < 1e-14);
  }
}

TEST_CASE("series and direct branches agree at the switch") {
  const auto lo = ou_step_moments(0.25 - 1e-12, 1.0);
  const auto hi = ou_step_moments(0.25 + 1e-12, 1.0);
  CHECK(rel_err(lo.var_y, hi.var_y) < 1e-10);
  CHECK(rel_err(lo.cov_uy, hi.cov_uy) < 1e-10);
  CHECK(rel_err(lo.var_u, hi.var_u) < 1e-10);
}

TEST_CASE("zero-rate limit") {
  const double dt = 0.37;
  const auto m = ou_step_moments(0.0, dt);
  CHECK(m.decay == 1.0);
  CHECK(m.relax == doctest::Approx(dt));
  CHECK(m.var_u == doctest::Approx(dt));
  CHECK(m.var_y == doctest::Approx(dt * dt * dt / 3.0));
  CHECK(m.cov_yw == doctest::Approx(dt * dt / 2.0));
  CHECK(m.cov_uy == doctest::Approx(dt * dt / 2.0));
  CHECK_THROWS_AS(ou_step_moments(1.0, 0.0), OutOfRange);
  CHECK_THROWS_AS(ou_step_moments(-1.0, 0.1), OutOfRange);
}

TEST_CASE("exact moments: short and long step limits") {
  const Mat A = Mat::Identity(1, 1);
  const Mat B = Mat::Identity(1, 1);
  const double eps = 0.2;
  const auto tiny = ou_exact_moments(A, Vec::Zero(1), B, eps, 1e-10);
  CHECK(tiny.decay(0, 0) == doctest::Approx(1.0));
  CHECK(tiny.cov(0, 0) < 1e-8);
  const auto huge = ou_exact_moments(A, Vec::Zero(1), B, eps, 1e6);
  CHECK(huge.cov(0, 0) == doctest::Approx(1.0 / (2.0 * eps)));
}

TEST_CASE("noise-free step is the exact exponential decay") {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 1.0;
  A(1, 1) = 3.0;
  const double eps = 0.05, dt = 0.02;
  Vec y(2);
  y << 1.0, -2.0;
  const Vec got = exact_ou_fast_step(A, Vec::Zero(2), Mat::Zero(2, 2), eps, y,
                                     dt, Vec::Zero(2));
  for (int i = 0; i < 2; ++i)
    CHECK(rel_err(got[i], std::exp(-A(i, i) * dt / eps) * y[i]) < 1e-10);
}

TEST_CASE("step covariance matches substepped Euler Monte Carlo") {
  // A = diag(1,3), B = I, eps = 0.1, dt = 0.05; the spec's frozen case.
  const double eps = 0.1, dt = 0.05;
  const double a[2] = {1.0, 3.0};
  const auto exact = ou_exact_moments(
      (Mat(2, 2) << 1, 0, 0, 3).finished(), Vec::Zero(2), Mat::Identity(2, 2),
      eps, dt);

  const int n_samples = 400000, n_sub = 400;
  const double hs = dt / n_sub;
  for (int comp = 0; comp < 2; ++comp) {
    NormalSource z(777 + comp);
    KahanSum sum, sumsq;
    for (int s = 0; s < n_samples; ++s) {
      double u = 0.0;
      for (int k = 0; k < n_sub; ++k)
        u += -(a[comp] / eps) * u * hs + std::sqrt(hs) / eps * z();
      sum.add(u);
      sumsq.add(u * u);
    }
    const double var = sumsq.value() / n_samples -
                       std::pow(sum.value() / n_samples, 2);
    const double se = var * std::sqrt(2.0 / n_samples);
    CHECK(std::abs(var - exact.cov(comp, comp)) < 3.0 * se);
  }
}

TEST_CASE("sampled step reproduces its stated mean and covariance") {
  Mat A(2, 2);
  A << 2.0, 0.5, -0.3, 1.5;
  Vec F(2);
  F << 0.4, -0.2;
  Mat B(2, 2);
  B << 1.0, 0.2, 0.0, 0.8;
  const double eps = 0.05, dt = 0.03;
  Vec y(2);
  y << 0.7, -0.4;
  const auto m = ou_exact_moments(A, F, B, eps, dt);
  const Vec mean_want = m.decay * y + m.offset;

  const int n = 100000;
  Vec mean = Vec::Zero(2);
  Mat cov = Mat::Zero(2, 2);
  std::vector<Vec> samples;
  samples.reserve(n);
  for (int s = 0; s < n; ++s) {
    NormalSource z(4242, s, kStreamWiener);
    Vec inc(2);
    inc << std::sqrt(dt) * z(), std::sqrt(dt) * z();
    const Vec out = exact_ou_fast_step(A, F, B, eps, y, dt, inc);
    samples.push_back(out);
    mean += out;
  }
  mean /= n;
  for (const auto& s : samples) cov += (s - mean) * (s - mean).transpose();
  cov /= n - 1;
  for (int i = 0; i < 2; ++i) {
    const double se_mean = std::sqrt(m.cov(i, i) / n);
    CHECK(std::abs(mean[i] - mean_want[i]) < 4.0 * se_mean);
    const double se_var = m.cov(i, i) * std::sqrt(2.0 / n);
    CHECK(std::abs(cov(i, i) - m.cov(i, i)) < 4.0 * se_var);
  }
  const double se_cross =
      std::sqrt(m.cov(0, 0) * m.cov(1, 1) * 1.5 / n);
  CHECK(std::abs(cov(0, 1) - m.cov(0, 1)) < 4.0 * se_cross);
}

TEST_CASE("joint step second moments") {
  const double a = 6.0, b = 2.5, dt = 0.08;
  const auto m = ou_step_moments(a, dt);
  const int n = 200000;
  NormalSource zw(31), za(32);
  KahanSum su, suu, sy, syy, suw, syw, suy;
  const double u0 = 0.9, y0 = -0.3;
  for (int s = 0; s < n; ++s) {
    const double dw = std::sqrt(dt) * zw();
    const auto st = ou_joint_step(a, b, dt, u0, y0, dw, za(), za());
    const double du = st.u_next - m.decay * u0;
    const double dy = st.y_next - y0 - m.relax * u0;
    su.add(du);
    suu.add(du * du);
    sy.add(dy);
    syy.add(dy * dy);
    suw.add(du * dw);
    syw.add(dy * dw);
    suy.add(du * dy);
  }
  auto mean = [&](KahanSum& k) { return k.value() / n; };
  const double var_u = b * b * m.var_u;
  const double var_y = b * b * m.var_y;
  CHECK(std::abs(mean(su)) < 4.0 * std::sqrt(var_u / n));
  CHECK(std::abs(mean(sy)) < 4.0 * std::sqrt(var_y / n));
  CHECK(std::abs(mean(suu) - var_u) < 4.0 * var_u * std::sqrt(2.0 / n));
  CHECK(std::abs(mean(syy) - var_y) < 4.0 * var_y * std::sqrt(2.0 / n));
  CHECK(std::abs(mean(suw) - b * m.cov_uw) <
        4.0 * std::sqrt(2.0 * var_u * dt / n));
  CHECK(std::abs(mean(syw) - b * m.cov_yw) <
        4.0 * std::sqrt(2.0 * var_y * dt / n));
  CHECK(std::abs(mean(suy) - b * b * m.cov_uy) <
        4.0 * std::sqrt(2.0 * var_u * var_y / n));
}

TEST_CASE("joint step degenerates to Euler for tiny theta") {
  const double a = 1.0, b = 2.0, dt = 1e-7;
  const double u0 = 1.3, y0 = 0.4, dw = 3e-4, z1 = 0.7, z2 = -1.1;
  const auto st = ou_joint_step(a, b, dt, u0, y0, dw, z1, z2);
  CHECK(rel_err(st.u_next, u0 - a * u0 * dt + b * dw) < 1e-3);
  CHECK(rel_err(st.y_next, y0 + u0 * dt) < 1e-6);
}

}  // TEST_SUITE
