#pragma once

#include "navslip/config.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace navslip {

inline const std::vector<std::string> kSubcommands{"simulate", "verify-basis", "energy-report", "mms",
                                                    "converge-time", "converge-space", "twin"};

enum ExitStatus : int {
  kExitPass = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitRuntimeError = 3,
};

struct RunOptions {
  bool serial = false;
  std::optional<std::filesystem::path> output_directory;  // overrides output.directory
};

struct RunResult {
  int status = kExitPass;
  nlohmann::json report;    // what went to report.json
  nlohmann::json manifest;  // what went to manifest.json
  std::filesystem::path directory;
};

/// Runs one subcommand and writes its artifacts:
///   trajectory.csv, ledger.csv   (runs that integrate one trajectory)
///   report.json                  (EstimateReport / StudyReport / certification)
///   config.json                  (resolved config, accepted by parse_config)
///   manifest.json                (config echo, basis hash, seeds, version, wall time)
///   error.json                   (only on failure)
/// Status is kExitPass exactly when every check in the report passes.
RunResult run_command(const std::string& subcommand, const RunDescription& desc, const RunOptions& opts,
                      std::ostream& log);

/// Dumps JSON with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace navslip
