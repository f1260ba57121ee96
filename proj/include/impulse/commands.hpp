#pragma once

#include "impulse/run_config.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace impulse {

/// Command-line overrides shared by every subcommand.
struct CommandOptions {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<Backend> backend;
  std::optional<std::string> policy_dir;  // solve output, or "none"
  std::optional<std::size_t> paths;
  std::optional<std::string> artifacts_dir;
};

/// Loads the config and applies --seed / --backend.
RunConfig resolve_config(const CommandOptions& opts);
std::filesystem::path resolve_out_dir(const CommandOptions& opts, const RunConfig& cfg);

// Each command writes its artifacts and a manifest.json (command, config
// hash, code version, seed) into its output directory and returns it.
//
//   solve            <out>/ summary.json timing.json convergence.csv
//                    thresholds.csv config.json values/
//   simulate         <out>/paths/path_NNNN.csv
//   evaluate         <out>/evaluation/evaluation.json
//   probe-flow       <out>/probe/probe.csv probe.json
//   export-figures   <artifacts>/figures/value_surface.csv policy_surface.csv
//   check-assumptions <out>/assumptions/assumptions.json
//   oracle-compare   <out>/oracle/oracle_compare.json
std::filesystem::path cmd_solve(const CommandOptions& opts);
std::filesystem::path cmd_simulate(const CommandOptions& opts);
std::filesystem::path cmd_evaluate(const CommandOptions& opts);
std::filesystem::path cmd_probe_flow(const CommandOptions& opts);
std::filesystem::path cmd_export_figures(const CommandOptions& opts);
std::filesystem::path cmd_check_assumptions(const CommandOptions& opts);
std::filesystem::path cmd_oracle_compare(const CommandOptions& opts);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace impulse
