#include "fastslow/integrators.hpp"

#include <cmath>

#include "fastslow/errors.hpp"
#include "fastslow/lyapunov.hpp"
#include "fastslow/ou.hpp"
#include "fastslow/rng.hpp"

namespace fastslow {

SchemeConfig::SchemeConfig(Scheme s, double dt_, int substeps)
    : scheme(s), dt(dt_), substeps_fast(substeps) {
  if (!(dt > 0)) throw InvalidGrid("scheme config: dt must be positive");
  if (substeps_fast < 1)
    throw InvalidGrid("scheme config: substeps_fast must be >= 1");
  if (scheme != Scheme::euler_maruyama && substeps_fast != 1)
    throw InvalidGrid("scheme config: only euler-maruyama substeps");
}

SchemeConfig SchemeConfig::checked(Scheme s, double dt, int substeps,
                                   const FastSlowSystem& sys,
                                   const Box& domain_box, int grid_density) {
  SchemeConfig cfg(s, dt, substeps);
  if (s == Scheme::euler_maruyama) {
    const double gamma_max = stability_upper(sys, domain_box, grid_density);
    if (!(cfg.fine_dt() < sys.eps / (2.0 * gamma_max)))
      throw StepUnstable(
          "euler-maruyama: dt/substeps_fast must be < eps/(2*gamma_max)");
  }
  return cfg;
}

namespace {

void check_path_grid(const WienerPath& path, const SchemeConfig& cfg) {
  const double want = cfg.fine_dt();
  for (int k = 0; k < path.steps(); ++k)
    if (std::abs(path.dt(k) - want) > 1e-9 * want)
      throw GridMismatch("path grid step does not match dt/substeps_fast");
}

struct Recorder {
  explicit Recorder(Trajectory& out, int stride, int steps)
      : out_(out), stride_(stride), steps_(steps) {}
  void operator()(int k, double t, const Vec& x, const Vec* y) {
    if (k % stride_ != 0 && k != steps_) return;
    out_.t.push_back(t);
    out_.slow.push_back(x);
    if (y) out_.fast.push_back(*y);
  }
  Trajectory& out_;
  int stride_, steps_;
};

}  // namespace

Trajectory simulate_full(const FastSlowSystem& sys, const Vec& x0,
                         const Vec& y0, const WienerPath& path,
                         const SchemeConfig& cfg) {
  if (x0.size() != sys.n_slow || y0.size() != sys.n_fast)
    throw GridMismatch("simulate_full: state dimension mismatch");
  if (path.m() != sys.m_noise)
    throw GridMismatch("simulate_full: path noise dimension mismatch");
  check_path_grid(path, cfg);
  if (cfg.scheme == Scheme::joint_ou_brownian && !sys.is_iso_diagonal())
    throw GridMismatch(
        "joint-ou-brownian requires the isotropic diagonal (Brownian) "
        "structure");

  const int steps = path.steps();
  const int stride =
      cfg.record_stride > 0 ? cfg.record_stride : cfg.substeps_fast;
  const double hdt = cfg.fine_dt();

  Trajectory out;
  Recorder record(out, stride, steps);
  Vec x = x0, y = y0;
  record(0, 0.0, x, &y);

  NormalSource aux(path.seed, path.path_index, kStreamAux);
  const bool iso = sys.is_iso_diagonal();
  const int d = sys.n_fast;

  for (int k = 0; k < steps; ++k) {
    const double t = path.t[k];
    const auto dw = path.increments.row(k);

    switch (cfg.scheme) {
      case Scheme::euler_maruyama: {
        if (iso) {
          const double a = sys.iso_a->value(x);
          const double b = sys.iso_b->value(x);
          for (int i = 0; i < d; ++i) {
            const double ui = y[i];
            y[i] = ui + (-a * ui) * (hdt / sys.eps) + (b / sys.eps) * dw[i];
            x[i] += ui * hdt;
          }
        } else {
          const Vec ydot = (-sys.A(x, t) * y + sys.F(x, t)) / sys.eps;
          const Vec xnew = x + hdt * (sys.C(x, t) * y + sys.Q(x, t)) +
                           sys.P(x, t) * dw.transpose();
          y = y + hdt * ydot + sys.B(x, t) * dw.transpose() / sys.eps;
          x = xnew;
        }
        break;
      }
      case Scheme::exact_ou_fast: {
        if (iso) {
          const double a = sys.iso_a->value(x) / sys.eps;
          const double bn = sys.iso_b->value(x) / sys.eps;
          const OuStepMoments m = ou_step_moments(a, hdt);
          const double sd = bn * std::sqrt(std::max(m.var_u, 0.0));
          const double rdt = std::sqrt(hdt);
          for (int i = 0; i < d; ++i) {
            const double ui = y[i];
            y[i] = m.decay * ui + sd * (dw[i] / rdt);
            x[i] += ui * hdt;
          }
        } else {
          const Vec ynew = exact_ou_fast_step(sys.A(x, t), sys.F(x, t),
                                              sys.B(x, t), sys.eps, y, hdt,
                                              dw.transpose());
          x = x + hdt * (sys.C(x, t) * y + sys.Q(x, t)) +
              sys.P(x, t) * dw.transpose();
          y = ynew;
        }
        break;
      }
      case Scheme::joint_ou_brownian: {
        const double a = sys.iso_a->value(x) / sys.eps;
        const double bn = sys.iso_b->value(x) / sys.eps;
        for (int i = 0; i < d; ++i) {
          const double z1 = aux();
          const double z2 = aux();
          const OuJointStep st =
              ou_joint_step(a, bn, hdt, y[i], x[i], dw[i], z1, z2);
          y[i] = st.u_next;
          x[i] = st.y_next;
        }
        break;
      }
    }

    if (!(x.norm() <= cfg.overflow_guard && y.norm() <= cfg.overflow_guard) ||
        !x.allFinite() || !y.allFinite()) {
      out.aborted = true;
      out.abort_step = static_cast<std::size_t>(k + 1);
      break;
    }
    record(k + 1, path.t[k + 1], x, &y);
  }
  return out;
}

Trajectory simulate_reduced(const LimitSde& sde, const Vec& x0,
                            const WienerPath& path, const SchemeConfig& cfg) {
  if (x0.size() != sde.dim)
    throw GridMismatch("simulate_reduced: state dimension mismatch");
  if (path.m() != sde.m_noise)
    throw GridMismatch("simulate_reduced: path noise dimension mismatch");
  check_path_grid(path, cfg);
  const int sub = cfg.substeps_fast;
  if (path.steps() % sub != 0)
    throw GridMismatch("simulate_reduced: substeps must divide path steps");
  const int coarse_steps = path.steps() / sub;
  const int stride =
      cfg.record_stride > 0 ? cfg.record_stride : cfg.substeps_fast;

  Trajectory out;
  Recorder record(out, stride, path.steps());
  Vec x = x0;
  record(0, 0.0, x, nullptr);
  Vec dw(path.m());
  for (int k = 0; k < coarse_steps; ++k) {
    const double t = path.t[k * sub];
    dw.setZero();
    for (int s = 0; s < sub; ++s)
      dw += path.increments.row(k * sub + s).transpose();
    x = x + cfg.dt * sde.drift(x, t) + sde.diffusion(x, t) * dw;
    record((k + 1) * sub, path.t[(k + 1) * sub], x, nullptr);
  }
  return out;
}

double squared_slow_distance(const Trajectory& full, const Trajectory& reduced,
                             double s) {
  const int i = full.index_of(s);
  const int j = reduced.index_of(s);
  if (i < 0 || j < 0)
    throw GridMismatch("time s not recorded on a common grid");
  return (full.slow[i] - reduced.slow[j]).squaredNorm();
}

StrongError strong_error(std::span<const Trajectory> full,
                         std::span<const Trajectory> reduced, double s) {
  if (full.size() != reduced.size())
    throw GridMismatch("strong_error: ensemble sizes differ");
  StrongError r;
  std::vector<double> d2;
  d2.reserve(full.size());
  for (std::size_t p = 0; p < full.size(); ++p) {
    if (full[p].aborted || reduced[p].aborted) {
      ++r.aborted;
      continue;
    }
    d2.push_back(squared_slow_distance(full[p], reduced[p], s));
  }
  r.stat = mean_with_error(d2);
  return r;
}

Vec sample_thermal_fast(const FastSlowSystem& sys, const Vec& x0, double t0,
                        std::uint64_t seed, std::uint64_t path_index) {
  NormalSource z(seed, path_index, kStreamThermal);
  Vec u(sys.n_fast);
  if (sys.is_iso_diagonal()) {
    const double eta = sys.iso_a->value(x0);
    const double sig = sys.iso_b->value(x0);
    const double sd = sig / std::sqrt(2.0 * eta * sys.eps);
    for (int i = 0; i < sys.n_fast; ++i) u[i] = sd * z();
    return u;
  }
  const Mat S = solve_stationary_lyapunov(sys.A(x0, t0), sys.B(x0, t0)).S;
  Eigen::SelfAdjointEigenSolver<Mat> es(S / sys.eps);
  const Mat L = es.eigenvectors() *
                es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  Vec zs(sys.n_fast);
  for (int i = 0; i < sys.n_fast; ++i) zs[i] = z();
  return L * zs;
}

std::vector<Trajectory> simulate_full_ensemble(const FastSlowSystem& sys,
                                               const Vec& x0,
                                               const std::optional<Vec>& y0,
                                               double horizon,
                                               const SchemeConfig& cfg,
                                               const EnsembleConfig& ens) {
  const int n_steps =
      static_cast<int>(std::llround(horizon / cfg.fine_dt()));
  if (n_steps < 1 || std::abs(n_steps * cfg.fine_dt() - horizon) >
                         1e-9 * std::max(1.0, horizon))
    throw GridMismatch("horizon must be a multiple of the fine step");
  const auto grid = uniform_grid(horizon, n_steps);

  SchemeConfig run = cfg;
  if (run.record_stride == 0) run.record_stride = n_steps;

  std::vector<Trajectory> out(ens.n_paths);
  parallel_for_index(ens.n_paths, ens.threads, [&](std::size_t p) {
    const auto path = sample_wiener(ens.seed, p, grid, sys.m_noise);
    const Vec u0 = y0 ? *y0
                      : sample_thermal_fast(sys, x0, 0.0, ens.seed, p);
    out[p] = simulate_full(sys, x0, u0, path, run);
  });
  return out;
}

EnsembleStrongError ensemble_strong_error(const FastSlowSystem& sys,
                                          const LimitSde& sde, const Vec& x0,
                                          bool thermal_init, double horizon,
                                          const SchemeConfig& cfg,
                                          const EnsembleConfig& ens) {
  const int n_steps =
      static_cast<int>(std::llround(horizon / cfg.fine_dt()));
  if (n_steps < 1 || std::abs(n_steps * cfg.fine_dt() - horizon) >
                         1e-9 * std::max(1.0, horizon))
    throw GridMismatch("horizon must be a multiple of the fine step");
  const auto grid = uniform_grid(horizon, n_steps);

  SchemeConfig run = cfg;
  if (run.record_stride == 0) run.record_stride = n_steps;

  // Slot per path; NaN marks aborted pairs, filtered in the ordered reduction.
  std::vector<double> d2(ens.n_paths);
  parallel_for_index(ens.n_paths, ens.threads, [&](std::size_t p) {
    const auto path = sample_wiener(ens.seed, p, grid, sys.m_noise);
    const Vec u0 = thermal_init
                       ? sample_thermal_fast(sys, x0, 0.0, ens.seed, p)
                       : Vec::Zero(sys.n_fast);
    const Trajectory full = simulate_full(sys, x0, u0, path, run);
    const Trajectory red = simulate_reduced(sde, x0, path, run);
    d2[p] = full.aborted ? std::numeric_limits<double>::quiet_NaN()
                         : squared_slow_distance(full, red, horizon);
  });

  EnsembleStrongError r;
  std::vector<double> kept;
  kept.reserve(d2.size());
  for (double v : d2) {
    if (std::isnan(v))
      ++r.aborted;
    else
      kept.push_back(v);
  }
  r.mse = mean_with_error(kept);
  return r;
}

}  // namespace fastslow
