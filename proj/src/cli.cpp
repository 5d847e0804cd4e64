#include "fastslow/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>

#include "fastslow/brownian.hpp"
#include "fastslow/errors.hpp"
#include "fastslow/estimators.hpp"
#include "fastslow/fokker_planck.hpp"
#include "fastslow/integrators.hpp"
#include "fastslow/limit.hpp"
#include "fastslow/numeric.hpp"
#include "fastslow/rng.hpp"
#include "fastslow/system.hpp"
#include "fastslow/wiener.hpp"

namespace fastslow::cli {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kStreamPoints = 0x90u;
constexpr std::uint64_t kStreamInit = 0x91u;

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex16(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------- schema

const std::set<std::string> kExperiments = {
    "preset",          "limit-coeffs", "simulate", "moments",
    "validity-window", "error-sweep",  "fick-check"};

const std::set<std::string> kCommonKeys = {"experiment", "seed", "threads",
                                           "out_dir", "outputs"};

const std::set<std::string>& experiment_keys(const std::string& exp) {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"preset", {"preset", "eta", "domain_box"}},
      {"limit-coeffs",
       {"eps", "sigma_bar_sq", "eta", "domain_box", "points", "n_points"}},
      {"simulate",
       {"preset", "eps", "sigma_bar_sq", "eta", "domain_box", "scheme", "dt",
        "substeps_fast", "paths", "horizon_s", "x0", "thermal_init", "target",
        "write_paths"}},
      {"moments",
       {"eps", "sigma_bar_sq", "eta", "domain_box", "scheme", "dt",
        "substeps_fast", "paths", "s_values", "orders", "grid_density",
        "thermal_init"}},
      {"error-sweep",
       {"eps_list", "sigma_bar_sq", "eta", "domain_box", "s", "paths",
        "dt_over_eps", "grid_density", "x0", "thermal_init"}},
      {"validity-window",
       {"preset", "eta", "domain_box", "delta_sq", "grid_density", "s_max"}},
      {"fick-check",
       {"sigma_bar_sq", "eta", "domain_box", "s", "paths", "dt_path", "grid_n",
        "dt_pde", "bins", "boundary", "rho0_center", "rho0_std"}},
  };
  return keys.at(exp);
}

void diag_error(std::vector<Diagnostic>& out, const std::string& msg) {
  out.push_back({Diagnostic::Level::error, msg});
}

void diag_warn(std::vector<Diagnostic>& out, const std::string& msg) {
  out.push_back({Diagnostic::Level::warning, msg});
}

bool positive_number(const Json& j) {
  return j.is_number() && j.get<double>() > 0.0;
}

bool nonneg_integer(const Json& j) {
  return j.is_number_unsigned() ||
         (j.is_number_integer() && j.get<long long>() >= 0);
}

// ---------------------------------------------------------------- fields

Box parse_box(const Json& j) {
  if (!j.is_object() || !j.contains("lo") || !j.contains("hi"))
    throw ConfigInvalid("domain_box needs lo and hi arrays");
  const auto lo = j.at("lo");
  const auto hi = j.at("hi");
  if (!lo.is_array() || !hi.is_array() || lo.size() != hi.size() ||
      lo.empty())
    throw ConfigInvalid("domain_box lo/hi must be equal-length arrays");
  Box b;
  b.lo = Vec(lo.size());
  b.hi = Vec(hi.size());
  for (std::size_t i = 0; i < lo.size(); ++i) {
    b.lo[i] = lo[i].get<double>();
    b.hi[i] = hi[i].get<double>();
    if (!(b.lo[i] < b.hi[i]))
      throw ConfigInvalid("domain_box must satisfy lo < hi per axis");
  }
  return b;
}

Vec parse_vec(const Json& j, int dim, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigInvalid(std::string(what) + " must be an array of length " +
                        std::to_string(dim));
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = j[i].get<double>();
  return v;
}

FieldPtr parse_field(const Json& spec, const Box& box) {
  if (!spec.is_object() || !spec.contains("kind"))
    throw ConfigInvalid("field spec needs a kind");
  const std::string kind = spec.at("kind").get<std::string>();
  auto check_keys = [&](const std::set<std::string>& allowed) {
    for (const auto& [k, v] : spec.items())
      if (!allowed.count(k))
        throw ConfigInvalid("unknown key '" + k + "' in field spec of kind " +
                            kind);
  };
  if (kind == "constant") {
    check_keys({"kind", "value"});
    return constant_field(spec.at("value").get<double>(), box);
  }
  if (kind == "gaussian-bump") {
    check_keys({"kind", "center", "width", "floor"});
    return gaussian_dip_field(parse_vec(spec.at("center"), box.dim(), "center"),
                              spec.at("width").get<double>(),
                              spec.at("floor").get<double>(), box);
  }
  if (kind == "smooth-ramp") {
    check_keys({"kind", "direction", "offset", "width", "lo", "hi"});
    return smooth_ramp_field(
        parse_vec(spec.at("direction"), box.dim(), "direction"),
        spec.at("offset").get<double>(), spec.at("width").get<double>(),
        spec.at("lo").get<double>(), spec.at("hi").get<double>(), box);
  }
  if (kind == "product") {
    check_keys({"kind", "factors"});
    std::vector<FieldPtr> fs;
    for (const auto& f : spec.at("factors")) fs.push_back(parse_field(f, box));
    return product_field(std::move(fs));
  }
  throw ConfigInvalid("unknown field kind '" + kind + "'");
}

// ---------------------------------------------------------------- writer

struct Writer {
  std::string dir;
  Json meta;
  Json config;

  std::string path(const std::string& name) const {
    return (fs::path(dir) / name).string();
  }

  void json_artifact(const std::string& name, const Json& body) const {
    Json doc;
    doc["meta"] = meta;
    doc["config"] = config;
    for (const auto& [k, v] : body.items()) doc[k] = v;
    std::ofstream out(path(name), std::ios::binary);
    out << doc.dump(2) << "\n";
  }

  void csv_artifact(const std::string& name,
                    const std::vector<std::string>& cols,
                    const std::vector<std::vector<double>>& rows) const {
    std::ofstream out(path(name), std::ios::binary);
    out << "# fastslow " << kToolVersion << "\n";
    out << "# config_hash=" << meta.at("config_hash").get<std::string>()
        << " seed=" << meta.at("seed").dump() << "\n";
    out << "# config=" << config.dump() << "\n";
    for (std::size_t i = 0; i < cols.size(); ++i)
      out << cols[i] << (i + 1 < cols.size() ? "," : "\n");
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        out << fmt_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
    }
  }
};

std::string output_name(const Json& cfg, const char* key,
                        const std::string& fallback) {
  if (cfg.contains("outputs") && cfg.at("outputs").contains(key))
    return cfg.at("outputs").at(key).get<std::string>();
  return fallback;
}

// ------------------------------------------------------------- helpers

struct DimensionlessSetup {
  DimensionlessParams dp;
  FastSlowSystem sys;
  Box box;
};

// Synthetic dimensionless model from (eta family, sigma_bar_sq, eps);
// sigma^2 = sigma_bar_sq * eta pointwise.
DimensionlessSetup dimensionless_from_config(const Json& cfg, double eps) {
  DimensionlessSetup s;
  s.box = parse_box(cfg.at("domain_box"));
  FieldPtr eta = parse_field(cfg.at("eta"), s.box);
  const double sb2 = cfg.at("sigma_bar_sq").get<double>();
  s.dp.eps = eps;
  s.dp.m0 = 0.0;  // no physical provenance
  s.dp.sigma_bar_sq = sb2;
  s.dp.eta_field = eta;
  s.dp.sigma_field = sqrt_field(scaled_field(sb2, eta));
  s.sys = make_brownian_system(s.dp.eta_field, s.dp.sigma_field, eps);
  return s;
}

PhysicalParams physical_from_config(const Json& cfg) {
  const std::string name = cfg.at("preset").get<std::string>();
  if (name != "water") throw ConfigInvalid("unknown preset '" + name + "'");
  if (cfg.contains("eta")) {
    const Box box = parse_box(cfg.at("domain_box"));
    return water_preset(parse_field(cfg.at("eta"), box));
  }
  return water_preset();
}

Scheme parse_scheme(const Json& cfg) {
  const std::string s = cfg.value("scheme", "euler-maruyama");
  if (s == "euler-maruyama") return Scheme::euler_maruyama;
  if (s == "exact-ou-fast") return Scheme::exact_ou_fast;
  if (s == "joint-ou-brownian") return Scheme::joint_ou_brownian;
  throw ConfigInvalid("unknown scheme '" + s + "'");
}

// ------------------------------------------------------------ experiments

void run_preset(const Json& cfg, const Writer& w) {
  const PhysicalParams p = physical_from_config(cfg);
  const DimensionlessParams dp = nondimensionalize(p);
  const double m = p.mass();
  Json body;
  body["physical"] = Json{{"r", p.r},
                          {"rho_particle", p.rho_particle},
                          {"rho_medium", p.rho_medium},
                          {"nu", p.nu},
                          {"T0", p.T0},
                          {"kB", p.kB},
                          {"ell", p.ell},
                          {"tau", p.tau},
                          {"mu_bar", p.mu_bar},
                          {"mass", m}};
  body["dimensionless"] = Json{{"m0", dp.m0},
                               {"eps", dp.eps},
                               {"sigma_bar_sq", dp.sigma_bar_sq}};
  body["derived"] =
      Json{{"D_bar", p.kB * p.T0 / (6.0 * std::numbers::pi * p.mu_bar * p.r)},
           {"b_bar_sq", 12.0 * std::numbers::pi * p.kB * p.T0 * p.mu_bar * p.r},
           {"relaxation_time", m / (6.0 * std::numbers::pi * p.mu_bar * p.r)}};
  w.json_artifact(output_name(cfg, "json", "preset.json"), body);
}

void run_limit_coeffs(const Json& cfg, const Writer& w) {
  const double eps = cfg.at("eps").get<double>();
  DimensionlessSetup s = dimensionless_from_config(cfg, eps);
  const LimitSde limit = reduce_system(s.sys);
  const int d = limit.dim;

  std::vector<Vec> points;
  if (cfg.contains("points")) {
    for (const auto& pj : cfg.at("points"))
      points.push_back(parse_vec(pj, d, "point"));
  } else {
    const int n = cfg.value("n_points", 20);
    const std::uint64_t seed = cfg.value("seed", 0ull);
    for (int i = 0; i < n; ++i) {
      NormalSource src(seed, i, kStreamPoints);
      Vec y(d);
      for (int k = 0; k < d; ++k)
        y[k] = s.box.lo[k] + (s.box.hi[k] - s.box.lo[k]) * src.uniform_open01();
      points.push_back(y);
    }
  }

  std::vector<std::string> cols;
  for (int k = 0; k < d; ++k) cols.push_back("x" + std::to_string(k));
  for (int k = 0; k < d; ++k) cols.push_back("q0_" + std::to_string(k));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < limit.m_noise; ++j)
      cols.push_back("C0_" + std::to_string(i) + std::to_string(j));

  std::vector<std::vector<double>> rows;
  for (const Vec& y : points) {
    std::vector<double> row;
    for (int k = 0; k < d; ++k) row.push_back(y[k]);
    const Vec q = limit.drift(y, 0.0);
    for (int k = 0; k < d; ++k) row.push_back(q[k]);
    const Mat c = limit.diffusion(y, 0.0);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < limit.m_noise; ++j) row.push_back(c(i, j));
    rows.push_back(std::move(row));
  }
  w.csv_artifact(output_name(cfg, "csv", "limit_coeffs.csv"), cols, rows);
}

Json vec_stats(const std::vector<Vec>& xs, int dim) {
  Json out;
  for (int k = 0; k < dim; ++k) {
    std::vector<double> comp;
    comp.reserve(xs.size());
    for (const auto& v : xs) comp.push_back(v[k]);
    const MeanWithError m = mean_with_error(comp);
    out["mean"].push_back(m.mean);
    out["std_error"].push_back(m.std_error);
    KahanSum sq;
    for (double c : comp) sq.add((c - m.mean) * (c - m.mean));
    out["variance"].push_back(
        comp.size() > 1 ? sq.value() / double(comp.size() - 1) : 0.0);
  }
  return out;
}

void run_simulate(const Json& cfg, const Writer& w) {
  const bool physical = cfg.contains("preset");
  FastSlowSystem sys;
  Box box;
  std::optional<PhysicalParams> phys;
  if (physical) {
    phys = physical_from_config(cfg);
    sys = make_physical_velocity_system(*phys);
    box = phys->mu_field->domain();
  } else {
    DimensionlessSetup s =
        dimensionless_from_config(cfg, cfg.at("eps").get<double>());
    sys = s.sys;
    box = s.box;
  }

  const Scheme scheme = parse_scheme(cfg);
  const double dt = cfg.at("dt").get<double>();
  const int substeps = cfg.value("substeps_fast", 1);
  const SchemeConfig scfg =
      scheme == Scheme::euler_maruyama
          ? SchemeConfig::checked(scheme, dt, substeps, sys, box)
          : SchemeConfig(scheme, dt, substeps);

  const double horizon = cfg.at("horizon_s").get<double>();
  const std::size_t n_paths = cfg.at("paths").get<std::size_t>();
  const std::uint64_t seed = cfg.value("seed", 0ull);
  const int threads = cfg.value("threads", 0);
  const bool thermal = cfg.value("thermal_init", true);
  const std::string target = cfg.value("target", "both");

  Vec x0 = box.center();
  if (cfg.contains("x0")) x0 = parse_vec(cfg.at("x0"), sys.n_slow, "x0");

  const int n_steps = static_cast<int>(std::llround(horizon / scfg.fine_dt()));
  if (n_steps < 1 ||
      std::abs(n_steps * scfg.fine_dt() - horizon) > 1e-9 * horizon)
    throw GridMismatch("horizon_s must be a multiple of dt/substeps_fast");
  const auto grid = uniform_grid(horizon, n_steps);

  SchemeConfig run_cfg = scfg;
  run_cfg.record_stride = n_steps;

  const bool want_full = target == "full" || target == "both";
  const bool want_reduced = target == "reduced" || target == "both";
  std::optional<LimitSde> limit;
  if (want_reduced) limit = reduce_system(sys);

  std::vector<Vec> full_slow(n_paths), full_fast(n_paths), red_slow(n_paths);
  std::vector<double> d2(n_paths,
                         std::numeric_limits<double>::quiet_NaN());
  std::vector<char> ok(n_paths, 1);

  parallel_for_index(n_paths, threads, [&](std::size_t p) {
    const auto path = sample_wiener(seed, p, grid, sys.m_noise);
    Trajectory full, red;
    if (want_full) {
      const Vec u0 = thermal ? sample_thermal_fast(sys, x0, 0.0, seed, p)
                             : Vec::Zero(sys.n_fast);
      full = simulate_full(sys, x0, u0, path, run_cfg);
      if (full.aborted) {
        ok[p] = 0;
        return;
      }
      full_slow[p] = full.slow.back();
      full_fast[p] = full.fast.back();
    }
    if (want_reduced) {
      red = simulate_reduced(*limit, x0, path, run_cfg);
      red_slow[p] = red.slow.back();
    }
    if (want_full && want_reduced)
      d2[p] = squared_slow_distance(full, red, horizon);
  });

  std::vector<Vec> fs, ff, rs;
  std::vector<double> dd;
  std::size_t aborted = 0;
  for (std::size_t p = 0; p < n_paths; ++p) {
    if (!ok[p]) {
      ++aborted;
      continue;
    }
    if (want_full) {
      fs.push_back(full_slow[p]);
      ff.push_back(full_fast[p]);
    }
    if (want_reduced) rs.push_back(red_slow[p]);
    if (want_full && want_reduced) dd.push_back(d2[p]);
  }

  Json body;
  body["n_steps"] = n_steps;
  body["aborted"] = aborted;
  if (want_full) {
    Json full_j = vec_stats(fs, sys.n_slow);
    std::vector<double> msd;
    for (const auto& v : fs) msd.push_back((v - x0).squaredNorm());
    const MeanWithError m = mean_with_error(msd);
    full_j["msd"] = Json{{"mean", m.mean}, {"std_error", m.std_error}};
    if (physical) {
      const double mass = phys->mass();
      std::vector<double> ke;
      for (const auto& v : ff) ke.push_back(0.5 * mass * v.squaredNorm());
      const MeanWithError k = mean_with_error(ke);
      const double equip = 1.5 * phys->kB * phys->T0;
      full_j["kinetic_energy"] =
          Json{{"mean", k.mean},
               {"std_error", k.std_error},
               {"equipartition_target", equip},
               {"equipartition_ratio", k.mean / equip}};
    }
    body["full"] = full_j;
  }
  if (want_reduced) body["reduced"] = vec_stats(rs, sys.n_slow);
  if (want_full && want_reduced) {
    const MeanWithError m = mean_with_error(dd);
    body["strong_error"] = Json{{"mean", m.mean},
                                {"std_error", m.std_error},
                                {"paths", m.n}};
  }
  w.json_artifact(output_name(cfg, "json", "simulate.json"), body);

  if (cfg.value("write_paths", false)) {
    std::vector<std::string> cols = {"path_index"};
    for (int k = 0; k < sys.n_slow; ++k)
      cols.push_back("x" + std::to_string(k));
    if (want_full)
      for (int k = 0; k < sys.n_fast; ++k)
        cols.push_back("u" + std::to_string(k));
    std::vector<std::vector<double>> rows;
    for (std::size_t p = 0; p < n_paths; ++p) {
      if (!ok[p]) continue;
      std::vector<double> row{static_cast<double>(p)};
      const Vec& xs = want_full ? full_slow[p] : red_slow[p];
      for (int k = 0; k < sys.n_slow; ++k) row.push_back(xs[k]);
      if (want_full)
        for (int k = 0; k < sys.n_fast; ++k) row.push_back(full_fast[p][k]);
      rows.push_back(std::move(row));
    }
    w.csv_artifact(output_name(cfg, "csv", "simulate_paths.csv"), cols, rows);
  }
}

void run_moments(const Json& cfg, const Writer& w) {
  const double eps = cfg.at("eps").get<double>();
  DimensionlessSetup s = dimensionless_from_config(cfg, eps);

  const double dt = cfg.at("dt").get<double>();
  const int substeps = cfg.value("substeps_fast", 1);
  const Scheme scheme = parse_scheme(cfg);
  SchemeConfig scfg = scheme == Scheme::euler_maruyama
                          ? SchemeConfig::checked(scheme, dt, substeps, s.sys,
                                                  s.box)
                          : SchemeConfig(scheme, dt, substeps);

  std::vector<double> s_values = cfg.at("s_values").get<std::vector<double>>();
  std::vector<int> orders = cfg.value("orders", std::vector<int>{1, 2, 3});
  const int gd = cfg.value("grid_density", 16);
  const double horizon = *std::max_element(s_values.begin(), s_values.end());

  // Pick a record stride hitting every requested time.
  const double fine = scfg.fine_dt();
  long stride = 0;
  for (double sv : s_values) {
    const long k = std::llround(sv / fine);
    if (std::abs(k * fine - sv) > 1e-9 * std::max(1.0, sv))
      throw GridMismatch("s_values must be multiples of dt/substeps_fast");
    stride = stride == 0 ? k : std::gcd(stride, k);
  }
  if (stride == 0) stride = 1;
  scfg.record_stride = static_cast<int>(stride);

  EnsembleConfig ens{cfg.value("seed", 0ull),
                     cfg.at("paths").get<std::size_t>(),
                     cfg.value("threads", 0)};
  const bool thermal = cfg.value("thermal_init", true);
  const auto trajs = simulate_full_ensemble(
      s.sys, s.box.center(), thermal ? std::nullopt : std::optional<Vec>(
                                           Vec::Zero(s.sys.n_fast)),
      horizon, scfg, ens);

  std::vector<std::string> cols = {"n", "s", "mc_value", "std_error", "bound",
                                   "flagged"};
  std::vector<std::vector<double>> rows;
  Json reports = Json::array();
  for (int n : orders) {
    const double bound = stationary_moment_bound(s.dp, n, s.box, gd);
    for (double sv : s_values) {
      const MomentReport rep = mc_moments(trajs, eps, n, sv, bound);
      rows.push_back({double(rep.n), rep.s, rep.mc_value, rep.std_error,
                      rep.bound, rep.flagged ? 1.0 : 0.0});
      reports.push_back(Json{{"n", rep.n},
                             {"s", rep.s},
                             {"mc_value", rep.mc_value},
                             {"std_error", rep.std_error},
                             {"bound", rep.bound},
                             {"flagged", rep.flagged},
                             {"paths", rep.paths}});
    }
  }
  w.csv_artifact(output_name(cfg, "csv", "moments.csv"), cols, rows);
  Json body;
  body["K1"] = stationary_moment_bound(s.dp, 1, s.box, gd);
  body["reports"] = reports;
  w.json_artifact(output_name(cfg, "json", "moments.json"), body);
}

void run_error_sweep(const Json& cfg, const Writer& w) {
  const std::vector<double> eps_list =
      cfg.at("eps_list").get<std::vector<double>>();
  const double s = cfg.at("s").get<double>();
  const double dt_over_eps = cfg.value("dt_over_eps", 0.05);
  const int gd = cfg.value("grid_density", 9);
  EnsembleConfig ens{cfg.value("seed", 0ull),
                     cfg.at("paths").get<std::size_t>(),
                     cfg.value("threads", 0)};
  const bool thermal = cfg.value("thermal_init", true);

  std::vector<std::string> cols = {"eps", "strong_error", "std_error",
                                   "bound"};
  std::vector<std::vector<double>> rows;
  std::vector<double> log_eps, log_err;
  bool within_bound = true;
  std::size_t aborted = 0;

  for (double eps : eps_list) {
    DimensionlessSetup st = dimensionless_from_config(cfg, eps);
    Vec x0 = st.box.center();
    if (cfg.contains("x0")) x0 = parse_vec(cfg.at("x0"), st.sys.n_slow, "x0");
    // Steps sized relative to eps so the discretization bias scales with it.
    const double dt_raw = dt_over_eps * eps;
    const int n_steps = std::max(1, (int)std::llround(s / dt_raw));
    const double dt = s / n_steps;
    const SchemeConfig scfg(Scheme::euler_maruyama, dt, 1);
    const LimitSde limit = reduce_system(st.sys);
    const EnsembleStrongError r =
        ensemble_strong_error(st.sys, limit, x0, thermal, s, scfg, ens);
    const GronwallConstants k =
        gronwall_constants(st.dp, st.box, std::max(8, gd));
    const double bound = error_bound(eps, k, s);
    rows.push_back({eps, r.mse.mean, r.mse.std_error, bound});
    log_eps.push_back(std::log(eps));
    log_err.push_back(std::log(r.mse.mean));
    within_bound = within_bound && r.mse.mean <= bound;
    aborted += r.aborted;
  }
  w.csv_artifact(output_name(cfg, "csv", "error_sweep.csv"), cols, rows);

  Json body;
  body["slope"] = fit_slope(log_eps, log_err);
  body["within_bound"] = within_bound;
  body["aborted"] = aborted;
  Json rows_j = Json::array();
  for (const auto& r : rows)
    rows_j.push_back(Json{{"eps", r[0]},
                          {"strong_error", r[1]},
                          {"std_error", r[2]},
                          {"bound", r[3]}});
  body["rows"] = rows_j;
  w.json_artifact(output_name(cfg, "json", "error_sweep.json"), body);
}

void run_validity_window(const Json& cfg, const Writer& w) {
  const PhysicalParams p = physical_from_config(cfg);
  const DimensionlessParams dp = nondimensionalize(p);
  const Box box = parse_box(cfg.at("domain_box"));
  const int gd = cfg.value("grid_density", 16);
  const double s_max = cfg.value("s_max", 1.0);
  const GronwallConstants k = gronwall_constants(dp, box, gd, s_max);
  const double delta_sq = cfg.value("delta_sq", p.r * p.r);
  const ValidityWindow vw = validity_window(p, k, delta_sq);

  Json body;
  body["K1"] = k.K1;
  body["K2_bar"] = k.K2_bar;
  body["K3_bar"] = k.K3_bar;
  body["K4"] = k.K4;
  body["t_min"] = vw.t_min;
  body["t_max"] = vw.t_max;
  body["empty"] = vw.empty;
  body["capped"] = vw.capped;
  body["delta_sq"] = vw.delta_sq;
  body["m0"] = dp.m0;
  body["eps"] = dp.eps;
  // The source text states the lower edge as tau/300 for this preset; the
  // computed tau/K4 is reported side by side, not asserted equal.
  body["t_min_paper_300inv"] = p.tau / 300.0;
  body["t_min_tau_over_K4"] = p.tau / k.K4;
  w.json_artifact(output_name(cfg, "json", "validity_window.json"), body);
}

void run_fick_check(const Json& cfg, const Writer& w) {
  const Box box = parse_box(cfg.at("domain_box"));
  if (box.dim() != 1)
    throw ConfigInvalid("fick-check needs a 1-D domain_box");
  DimensionlessSetup s = dimensionless_from_config(cfg, 1e-6);

  const double horizon = cfg.at("s").get<double>();
  const int grid_n = cfg.value("grid_n", 400);
  const double dt_pde = cfg.value("dt_pde", horizon / 2000.0);
  const double dt_path = cfg.value("dt_path", horizon / 2000.0);
  const int bins = cfg.value("bins", 64);
  const std::string bnd = cfg.value("boundary", "reflecting");
  const Boundary boundary =
      bnd == "periodic" ? Boundary::periodic : Boundary::reflecting;
  const double c0 = cfg.value("rho0_center", box.center()[0]);
  const double w0 = cfg.value("rho0_std", (box.hi[0] - box.lo[0]) / 16.0);

  // Operator equivalence on a default suite of smooth densities.
  const double lo = box.lo[0], hi = box.hi[0];
  const double mid = 0.5 * (lo + hi), span = hi - lo;
  std::vector<std::function<double(double)>> suite = {
      [=](double x) { return std::exp(-0.5 * std::pow((x - mid) / (span / 8), 2)); },
      [=](double x) {
        return std::exp(-0.5 * std::pow((x - lo - 0.3 * span) / (span / 12), 2));
      },
      [=](double x) {
        return 1.0 + 0.5 * std::cos(4.0 * std::numbers::pi * (x - lo) / span);
      }};
  DensityGrid eq_grid = DensityGrid::make(lo, hi, grid_n, boundary);
  const double equivalence = operator_equivalence_check(s.dp, suite, eq_grid);

  // PDE solve of the Fick form.
  const DiffusivityField D = diffusivity_from(s.dp);
  DensityGrid rho0 = DensityGrid::make(lo, hi, grid_n, boundary);
  rho0.fill([&](double x) {
    return std::exp(-0.5 * std::pow((x - c0) / w0, 2));
  });
  rho0.normalize();
  const FickSolveReport pde = solve_fick(D, rho0, horizon, dt_pde);

  // Reduced-SDE ensemble histogram on the same initial law.
  const Sde1d sde = brownian_limit_sde_1d(s.dp);
  const std::size_t n_paths = cfg.at("paths").get<std::size_t>();
  const std::uint64_t seed = cfg.value("seed", 0ull);
  const int n_steps = std::max(1, (int)std::llround(horizon / dt_path));
  const double dt = horizon / n_steps;
  std::vector<double> finals(n_paths);
  parallel_for_index(n_paths, cfg.value("threads", 0), [&](std::size_t p) {
    NormalSource init(seed, p, kStreamInit);
    NormalSource noise(seed, p, kStreamWiener);
    double x = c0 + w0 * init();
    const double sq = std::sqrt(dt);
    for (int k = 0; k < n_steps; ++k)
      x += sde.drift(x) * dt + sde.diffusion(x) * sq * noise();
    finals[p] = x;
  });

  const double binw = span / bins;
  std::vector<long> counts(bins, 0);
  long out_of_domain = 0;
  for (double x : finals) {
    const int b = static_cast<int>(std::floor((x - lo) / binw));
    if (b < 0 || b >= bins) {
      ++out_of_domain;
      continue;
    }
    ++counts[b];
  }

  // PDE density at bin centers by linear interpolation between nodes.
  auto rho_at = [&](double x) {
    const double h = pde.grid.h();
    const double u = (x - lo) / h;
    const int i = std::min<int>(std::max(0, (int)std::floor(u)), grid_n - 1);
    const double f = u - i;
    return (1.0 - f) * pde.grid.rho[i] + f * pde.grid.rho[i + 1];
  };

  std::vector<std::string> cols = {"x", "rho_solved", "rho_histogram",
                                   "abs_difference"};
  std::vector<std::vector<double>> rows;
  KahanSum l1;
  for (int b = 0; b < bins; ++b) {
    const double xc = lo + (b + 0.5) * binw;
    const double hist = counts[b] / (double(n_paths) * binw);
    const double solved = rho_at(xc);
    const double diff = std::abs(solved - hist);
    l1.add(diff * binw);
    rows.push_back({xc, solved, hist, diff});
  }
  w.csv_artifact(output_name(cfg, "csv", "fick_check.csv"), cols, rows);

  double d_bar = 0;
  for (int i = 0; i <= grid_n; ++i)
    d_bar = std::max(d_bar, D.value(rho0.node(i)));

  Json body;
  body["mass_drift"] = pde.mass_drift;
  body["L1_error"] = l1.value();
  body["equivalence_max_diff"] = equivalence;
  body["D_bar"] = d_bar;
  body["clipped"] = pde.clipped;
  body["out_of_domain"] = out_of_domain;
  w.json_artifact(output_name(cfg, "json", "fick_check.json"), body);
}

}  // namespace

// ------------------------------------------------------------- validation

std::vector<Diagnostic> validate(const Json& config) {
  std::vector<Diagnostic> out;
  if (!config.is_object()) {
    diag_error(out, "config must be a JSON object");
    return out;
  }
  if (!config.contains("experiment") ||
      !config.at("experiment").is_string() ||
      !kExperiments.count(config.at("experiment").get<std::string>())) {
    diag_error(out,
               "config needs an 'experiment' key naming one of: preset, "
               "limit-coeffs, simulate, moments, error-sweep, "
               "validity-window, fick-check");
    return out;
  }
  const std::string exp = config.at("experiment").get<std::string>();
  const auto& allowed = experiment_keys(exp);
  for (const auto& [k, v] : config.items()) {
    if (!kCommonKeys.count(k) && !allowed.count(k))
      diag_error(out, "unknown key '" + k + "' for experiment " + exp);
  }

  auto require = [&](const char* key, auto&& pred, const char* what) {
    if (!config.contains(key))
      diag_error(out, std::string("missing required key '") + key + "'");
    else if (!pred(config.at(key)))
      diag_error(out, std::string("key '") + key + "' " + what);
  };
  auto optional_check = [&](const char* key, auto&& pred, const char* what) {
    if (config.contains(key) && !pred(config.at(key)))
      diag_error(out, std::string("key '") + key + "' " + what);
  };

  const bool needs_box =
      exp != "preset" || config.contains("eta");
  if (needs_box && exp != "preset")
    require("domain_box", [](const Json& j) { return j.is_object(); },
            "must be an object with lo/hi");
  if (exp == "preset" && config.contains("eta") &&
      !config.contains("domain_box"))
    diag_error(out, "preset with an eta profile needs a domain_box");

  // Parse the box + eta once for the physics advisories below.
  std::optional<Box> box;
  FieldPtr eta;
  try {
    if (config.contains("domain_box")) box = parse_box(config.at("domain_box"));
    if (config.contains("eta") && box) eta = parse_field(config.at("eta"), *box);
  } catch (const Error& e) {
    diag_error(out, e.what());
    return out;
  }

  if (eta) {
    const double lo = field_min_on(*eta, *box, 17);
    if (!(lo > 0))
      diag_error(out, "eta field must be strictly positive on the domain box");
    const double hi = field_max_on(*eta, *box, 17);
    if (hi > 1.0 + 1e-9)
      diag_warn(out, "eta exceeds 1 on the domain box; the Brownian "
                     "normalization expects eta = mu/mu_bar <= 1");
  }

  if (exp == "limit-coeffs" || exp == "moments" || exp == "error-sweep" ||
      exp == "fick-check")
    require("sigma_bar_sq", positive_number, "must be a positive number");
  if (exp == "limit-coeffs" || exp == "moments")
    require("eps", positive_number, "must be a positive number");
  if (exp == "simulate" && !config.contains("preset"))
    require("eps", positive_number, "must be a positive number");
  if (exp == "simulate" || exp == "moments") {
    require("dt", positive_number, "must be a positive number");
    require("paths", nonneg_integer, "must be a non-negative integer");
  }
  if (exp == "simulate")
    require("horizon_s", positive_number, "must be a positive number");
  if (exp == "moments")
    require("s_values",
            [](const Json& j) { return j.is_array() && !j.empty(); },
            "must be a nonempty array");
  if (exp == "error-sweep") {
    require("eps_list",
            [](const Json& j) { return j.is_array() && !j.empty(); },
            "must be a nonempty array");
    require("paths", nonneg_integer, "must be a non-negative integer");
    require("s",
            [](const Json& j) {
              return j.is_number() && j.get<double>() > 0 &&
                     j.get<double>() < 1;
            },
            "must lie in (0, 1), the validity range of the error bound");
  }
  if (exp == "fick-check") {
    require("s", positive_number, "must be a positive number");
    require("paths", nonneg_integer, "must be a non-negative integer");
    if (box && box->dim() != 1)
      diag_error(out, "fick-check needs a 1-D domain_box");
  }
  if (exp == "validity-window" || exp == "preset" ||
      (exp == "simulate" && config.contains("preset")))
    optional_check("preset",
                   [](const Json& j) {
                     return j.is_string() && j.get<std::string>() == "water";
                   },
                   "must be \"water\"");
  if (exp == "validity-window") {
    require("preset", [](const Json& j) { return j.is_string(); },
            "must name a preset");
    require("domain_box", [](const Json& j) { return j.is_object(); },
            "is required for the sup/inf constants");
    optional_check("delta_sq", positive_number, "must be a positive number");
  }
  optional_check("seed", nonneg_integer, "must be a non-negative integer");
  optional_check("threads",
                 [](const Json& j) {
                   return j.is_number_integer() && j.get<int>() >= 0;
                 },
                 "must be a non-negative integer");
  optional_check("grid_density",
                 [](const Json& j) {
                   return j.is_number_integer() && j.get<int>() >= 2;
                 },
                 "must be an integer >= 2");

  // Explicit-Euler fast-line stability advisory: dt/substeps < eps/(2 sup A).
  if ((exp == "simulate" || exp == "moments") && eta &&
      config.contains("dt") && config.at("dt").is_number() &&
      config.contains("eps") && config.at("eps").is_number() &&
      config.value("scheme", "euler-maruyama") ==
          std::string("euler-maruyama")) {
    const double fine =
        config.at("dt").get<double>() / config.value("substeps_fast", 1);
    const double amax = field_max_on(*eta, *box, 9);
    if (!(fine < config.at("eps").get<double>() / (2.0 * amax)))
      diag_warn(out,
                "euler-maruyama: dt/substeps_fast >= eps/(2*sup eta); the "
                "fast line will be unstable");
  }
  return out;
}

Json resolve(const Json& config) {
  Json r = config;
  if (!r.contains("seed")) r["seed"] = 0;
  if (!r.contains("threads")) r["threads"] = 0;
  const std::string exp = r.value("experiment", "");
  if (exp == "preset" && !r.contains("preset")) r["preset"] = "water";
  if (exp == "simulate") {
    if (!r.contains("scheme")) r["scheme"] = "euler-maruyama";
    if (!r.contains("substeps_fast")) r["substeps_fast"] = 1;
    if (!r.contains("target")) r["target"] = "both";
    if (!r.contains("thermal_init")) r["thermal_init"] = true;
    if (!r.contains("write_paths")) r["write_paths"] = false;
  } else if (exp == "moments") {
    if (!r.contains("scheme")) r["scheme"] = "euler-maruyama";
    if (!r.contains("substeps_fast")) r["substeps_fast"] = 1;
    if (!r.contains("orders")) r["orders"] = std::vector<int>{1, 2, 3};
    if (!r.contains("grid_density")) r["grid_density"] = 16;
    if (!r.contains("thermal_init")) r["thermal_init"] = true;
  } else if (exp == "error-sweep") {
    if (!r.contains("dt_over_eps")) r["dt_over_eps"] = 0.05;
    if (!r.contains("grid_density")) r["grid_density"] = 9;
    if (!r.contains("thermal_init")) r["thermal_init"] = true;
  } else if (exp == "validity-window") {
    if (!r.contains("grid_density")) r["grid_density"] = 16;
    if (!r.contains("s_max")) r["s_max"] = 1.0;
  } else if (exp == "limit-coeffs") {
    if (!r.contains("points") && !r.contains("n_points")) r["n_points"] = 20;
  } else if (exp == "fick-check") {
    if (!r.contains("grid_n")) r["grid_n"] = 400;
    if (!r.contains("bins")) r["bins"] = 64;
    if (!r.contains("boundary")) r["boundary"] = "reflecting";
  }
  return r;
}

Json canonical(const Json& resolved) {
  Json c = resolved;
  c.erase("threads");
  c.erase("out_dir");
  c.erase("outputs");
  return c;
}

std::uint64_t config_hash(const Json& resolved) {
  return fnv1a(canonical(resolved).dump());
}

namespace {

const char* error_kind(const Error& e) {
  if (dynamic_cast<const StabilityViolation*>(&e)) return "StabilityViolation";
  if (dynamic_cast<const InvalidGrid*>(&e)) return "InvalidGrid";
  if (dynamic_cast<const DomainMismatch*>(&e)) return "DomainMismatch";
  if (dynamic_cast<const SingularA*>(&e)) return "SingularA";
  if (dynamic_cast<const UnstableA*>(&e)) return "UnstableA";
  if (dynamic_cast<const SolveFailure*>(&e)) return "SolveFailure";
  if (dynamic_cast<const GradientUnavailable*>(&e))
    return "GradientUnavailable";
  if (dynamic_cast<const GridMismatch*>(&e)) return "GridMismatch";
  if (dynamic_cast<const StepUnstable*>(&e)) return "StepUnstable";
  if (dynamic_cast<const OutOfRange*>(&e)) return "OutOfRange";
  if (dynamic_cast<const InsufficientPaths*>(&e)) return "InsufficientPaths";
  if (dynamic_cast<const BoundaryUnsupported*>(&e))
    return "BoundaryUnsupported";
  if (dynamic_cast<const FieldMismatch*>(&e)) return "FieldMismatch";
  if (dynamic_cast<const NonConvergedLinearSolve*>(&e))
    return "NonConvergedLinearSolve";
  if (dynamic_cast<const ConfigInvalid*>(&e)) return "ConfigInvalid";
  return "Error";
}

}  // namespace

int run(const Json& config, const std::string& out_dir_override) {
  const Json resolved = resolve(config);
  const auto diags = validate(resolved);
  bool bad = false;
  for (const auto& d : diags) {
    Json j{{"level", d.level == Diagnostic::Level::error ? "error" : "warning"},
           {"message", d.message}};
    std::fprintf(stderr, "%s\n", j.dump().c_str());
    bad = bad || d.level == Diagnostic::Level::error;
  }
  if (bad) return 2;

  std::string dir = out_dir_override;
  if (dir.empty()) dir = resolved.value("out_dir", "");
  if (dir.empty()) {
    const char* env = std::getenv("FASTSLOW_OUT_DIR");
    dir = env ? env : ".";
  }
  std::error_code ec;
  fs::create_directories(dir, ec);

  Writer w;
  w.dir = dir;
  w.config = canonical(resolved);
  w.meta = Json{{"tool", "fastslow"},
                {"version", kToolVersion},
                {"config_hash", hex16(config_hash(resolved))},
                {"seed", resolved.value("seed", 0ull)}};

  const std::string exp = resolved.at("experiment").get<std::string>();
  try {
    if (exp == "preset")
      run_preset(resolved, w);
    else if (exp == "limit-coeffs")
      run_limit_coeffs(resolved, w);
    else if (exp == "simulate")
      run_simulate(resolved, w);
    else if (exp == "moments")
      run_moments(resolved, w);
    else if (exp == "error-sweep")
      run_error_sweep(resolved, w);
    else if (exp == "validity-window")
      run_validity_window(resolved, w);
    else if (exp == "fick-check")
      run_fick_check(resolved, w);
  } catch (const ConfigInvalid& e) {
    std::fprintf(stderr, "%s\n",
                 Json{{"level", "error"}, {"message", e.what()}}.dump().c_str());
    return 2;
  } catch (const Error& e) {
    Json rec{{"error", Json{{"type", error_kind(e)}, {"message", e.what()}}}};
    w.json_artifact("error.json", rec);
    std::fprintf(stderr, "%s\n", rec.dump().c_str());
    return 3;
  }
  return 0;
}

}  // namespace fastslow::cli
