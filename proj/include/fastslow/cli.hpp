#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace fastslow::cli {

using Json = nlohmann::ordered_json;

struct Diagnostic {
  enum class Level { warning, error };
  Level level = Level::error;
  std::string message;
};

// Schema validation plus physics sanity advisories (no computation beyond
// cheap grid scans). Errors make run() refuse the config; warnings don't.
std::vector<Diagnostic> validate(const Json& config);

// Config with defaults applied; the canonical form embedded in artifacts.
// Execution-only keys (threads, out_dir, outputs) are stripped from the
// canonical form so reruns on different worker counts stay byte-identical.
Json resolve(const Json& config);
Json canonical(const Json& resolved);
std::uint64_t config_hash(const Json& resolved);

// Executes the configured experiment and writes its artifacts under out_dir
// (config key, FASTSLOW_OUT_DIR, or "."). Returns 0 on success, 2 on config
// errors, 3 on numerical/module failures (with an error.json record).
int run(const Json& config, const std::string& out_dir_override = "");

std::string fmt_double(double v);

}  // namespace fastslow::cli
