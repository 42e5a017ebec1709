#pragma once

#include "navslip/harness.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace navslip {

inline constexpr int kConfigFormatVersion = 1;

struct ForcingSpec {
  enum class Kind { None, StaticMode, Mms };
  Kind kind = Kind::None;
  int mode = 0;
  double amplitude = 0.0;
  std::string mms_case = "standard";
};

struct StudySpec {
  std::vector<double> dts{1e-2, 5e-3, 2.5e-3};
  std::vector<int> modes;  // empty: {m/4, m/2, m}
  std::vector<double> eps{1e-3, 5e-4, 2.5e-4};
  std::uint64_t perturbation_seed = 1;
  double divergence_tol = 1e-8;
  double normal_trace_tol = 1e-8;
  double slip_tol = 1e-6;
  double gram_tol = 1e-10;
};

/// Fully validated run description with every default filled in.
struct RunDescription {
  DomainSpec domain;
  int modes = 0;
  GridRequest grid;
  SolverConfig solver;
  bool auto_dt = true;  // dt picked by default_dt at run time
  ForcingSpec forcing;
  InitialSpec initial;
  std::filesystem::path output_directory = "navslip-out";
  bool write_csv = true;
  bool write_json = true;
  StudySpec study;

  /// Canonical echo; parsing it again yields the same description.
  nlohmann::json to_json() const;
};

struct ConfigIssue {
  std::string path;     // dotted key path, e.g. "physics.exponent"
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const { return issues_; }
  nlohmann::json to_json() const;

 private:
  std::vector<ConfigIssue> issues_;
};

/// Validates a whole document and reports every problem at once.
/// Unknown keys are rejected with the nearest known key as a suggestion.
RunDescription parse_config(const nlohmann::json& doc);
RunDescription parse_config_text(const std::string& text);
/// Throws ConfigError for a missing or unreadable file.
RunDescription parse_config(const std::filesystem::path& path);

/// Nearest candidate by edit distance, empty when nothing is close.
std::string nearest_key(const std::string& key, const std::vector<std::string>& candidates);

}  // namespace navslip
