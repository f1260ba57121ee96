#pragma once

#include "impulse/assumptions.hpp"
#include "impulse/problem_config.hpp"
#include "impulse/simulate.hpp"
#include "impulse/solver.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace impulse {

/// Coupled-path probe around a base impulse (time, u): each offset (dt, du)
/// compares (time, u) with (time + dt, u + du).
struct ProbeConfig {
  double time = 0.3;
  double impulse = 1.0;
  std::vector<ImpulseEvent> prefix;
  std::vector<ImpulseEvent> suffix;
  std::vector<std::pair<double, double>> offsets;
  std::size_t n_paths = 10000;
};

/// Constant-history slice mesh for figure export and thresholds.
struct ExportConfig {
  double x_min = -3.0;
  double x_max = 3.0;
  int x_points = 61;
};

/// One JSON document describing a run. Sections:
///   problem         see ProblemConfig
///   discretization  {dt, grid {kind, half_width, points_per_axis},
///                    impulse_points, quadrature_nodes}
///   solver          {backend, k_max, tol,
///                    regression {degree, ridge, samples, exploration_rate}}
///   evaluation      {n_paths, seed, simulate_paths}
///   output_dir      optional; --out overrides
///   probe, export, assumptions  optional
/// Unknown keys anywhere are errors.
struct RunConfig {
  ProblemConfig problem;
  double dt = 0.01;
  SolverOptions solver;
  std::size_t n_paths = 10000;
  std::size_t simulate_paths = 5;
  std::uint64_t seed = 0;
  std::string output_dir;
  std::optional<ProbeConfig> probe;
  ExportConfig export_mesh;
  AssumptionOptions assumptions;
};

RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
/// Normalized form with every default filled in.
nlohmann::json to_json(const RunConfig& cfg);

/// Replaces the seed everywhere it is used (evaluation, regression, checks).
void set_seed(RunConfig& cfg, std::uint64_t seed);

TimeGrid make_time_grid(const RunConfig& cfg);
ProblemSpec make_problem(const RunConfig& cfg);

}  // namespace impulse
