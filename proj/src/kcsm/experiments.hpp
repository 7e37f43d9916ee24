#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace kcsm::expt {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes of the experiment runner (mirrored by the CLI).
enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,
  kValidationError = 2,
  kSolverError = 3,
};

struct RunResult {
  int exit_code = kOk;
  nlohmann::json summary;              // subcommand-specific key/value report
  std::vector<std::string> files_written;
};

/// Deep-merges override fields into a base config (overrides win; objects
/// merge recursively). Used by the CLI to let flags override config files.
nlohmann::json merge_config(const nlohmann::json& base, const nlohmann::json& overrides);

/// Runs one experiment described by a schema-1 config object. Validation
/// problems throw Error(InvalidArgument/CapExceeded); this function maps them
/// to exit codes only in run_to_result.
RunResult run_experiment(const nlohmann::json& config);

/// Like run_experiment but catches kcsm errors and turns them into exit codes
/// plus an "error" field in the summary (the C API entry point).
RunResult run_to_result(const std::string& config_text);

}  // namespace kcsm::expt
