#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "thermoray/config.hpp"

namespace thermoray {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRejected = 2, kExitNumerical = 3 };

struct RunOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

/// Payloads of one command; nothing touches the disk until all are built.
struct CommandOutput {
  std::string csv;
  json results;
};

const std::vector<std::string>& command_names();

CommandOutput run_trace(const ExperimentConfig& cfg, int threads);
CommandOutput run_scatter(const ExperimentConfig& cfg, int threads);
CommandOutput run_transport(const ExperimentConfig& cfg, int threads);
CommandOutput run_transform(const ExperimentConfig& cfg, int threads);
CommandOutput run_verify(const ExperimentConfig& cfg, int threads);
CommandOutput run_kernel(const ExperimentConfig& cfg, int threads);
CommandOutput run_rigidity(const ExperimentConfig& cfg, int threads);

CommandOutput run_command(const std::string& command, const ExperimentConfig& cfg, int threads);

/// The report document: {command, version, config_hash, seed, results}.
json make_report(const std::string& command, const ExperimentConfig& cfg, const json& results);

/// Loads, runs and writes <out>/<command>.csv, <command>_report.json and
/// metadata.json. Errors are printed to `err` and mapped to an exit code.
int run(const std::string& command, const RunOptions& opt, std::ostream& err);

/// Exit code of the exception currently being handled.
int exit_code_for_current_exception(std::ostream& err);

}  // namespace thermoray
