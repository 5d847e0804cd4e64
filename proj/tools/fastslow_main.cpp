// Command-line front end: subcommands map to experiments, a JSON config file
// supplies the full run definition, and a few common flags override file keys.

#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "fastslow/cli.hpp"

namespace {

using fastslow::cli::Json;

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::fprintf(stderr, "cannot open config file: %s\n", path.c_str());
    std::exit(2);
  }
  try {
    return Json::parse(in);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config parse error: %s\n", e.what());
    std::exit(2);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fastslow: fast-slow SDE simulation and diffusion "
               "approximation toolkit"};
  app.require_subcommand(0, 1);
  app.fallthrough();

  std::string config_path, out_dir;
  bool validate_only = false;
  std::uint64_t seed = 0;
  std::size_t paths = 0;
  int threads = -1;
  double dt = 0, eps = 0;

  app.add_option("-c,--config", config_path, "JSON run configuration file");
  app.add_option("--out-dir", out_dir, "output directory (overrides config "
                                       "and FASTSLOW_OUT_DIR)");
  app.add_flag("--validate-only", validate_only,
               "validate the configuration and exit");
  auto* seed_opt = app.add_option("--seed", seed, "root RNG seed");
  auto* paths_opt = app.add_option("--paths", paths, "Monte Carlo paths");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads "
                                                           "(0 = hardware)");
  auto* dt_opt = app.add_option("--dt", dt, "time step");
  auto* eps_opt = app.add_option("--eps", eps, "small parameter");

  const char* names[] = {"preset",       "limit-coeffs",    "simulate",
                         "moments",      "error-sweep",     "validity-window",
                         "fick-check"};
  for (const char* n : names)
    app.add_subcommand(n, std::string("run the ") + n + " experiment");

  CLI11_PARSE(app, argc, argv);

  Json config = config_path.empty() ? Json::object() : load_config(config_path);
  const auto subs = app.get_subcommands();
  if (!subs.empty()) config["experiment"] = subs.front()->get_name();
  if (!config.contains("experiment")) {
    std::fprintf(stderr, "no experiment: pass a subcommand or a config file "
                         "with an 'experiment' key\n");
    return 2;
  }
  if (seed_opt->count()) config["seed"] = seed;
  if (paths_opt->count()) config["paths"] = paths;
  if (threads_opt->count()) config["threads"] = threads;
  if (dt_opt->count()) config["dt"] = dt;
  if (eps_opt->count()) config["eps"] = eps;

  if (validate_only) {
    const auto diags = fastslow::cli::validate(fastslow::cli::resolve(config));
    bool bad = false;
    for (const auto& d : diags) {
      Json j{{"level", d.level == fastslow::cli::Diagnostic::Level::error
                           ? "error"
                           : "warning"},
             {"message", d.message}};
      std::fprintf(stderr, "%s\n", j.dump().c_str());
      bad = bad || d.level == fastslow::cli::Diagnostic::Level::error;
    }
    return bad ? 2 : 0;
  }
  return fastslow::cli::run(config, out_dir);
}
