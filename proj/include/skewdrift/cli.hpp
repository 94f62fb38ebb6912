#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "skewdrift/experiments.hpp"

namespace skewdrift {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

struct RunConfig {
  ExperimentSpec experiment;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = ".";
};

/// Strict parse: every key must be one of experiment, master_seed, overrides,
/// output_dir. Throws ConfigError naming the offending key.
RunConfig parse_run_config(const nlohmann::json& document);
RunConfig load_run_config(const std::filesystem::path& path);

/// Entry point of the skewdrift executable; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace skewdrift
