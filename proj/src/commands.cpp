#include "impulse/commands.hpp"

#include "impulse/artifacts.hpp"
#include "impulse/format.hpp"
#include "impulse/oracle.hpp"
#include "impulse/policy.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

namespace impulse {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& cfg) {
  write_json(dir / "manifest.json", {{"command", command},
                                     {"config_hash", fnv1a_hex(to_json(cfg).dump())},
                                     {"code_version", code_version()},
                                     {"seed", cfg.seed},
                                     {"backend", to_string(cfg.solver.backend)}});
}

json estimate_json(const MonteCarloEstimate& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"n_paths", e.n_paths}};
}

// JSON null for NaN keeps files valid.
json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<double> mesh(const ExportConfig& e) {
  std::vector<double> xs;
  for (int i = 0; i < e.x_points; ++i) {
    xs.push_back(e.x_min + (e.x_max - e.x_min) * static_cast<double>(i) /
                               static_cast<double>(e.x_points - 1));
  }
  return xs;
}

// Thresholds over the stored arrival states of a reachable-set solution.
std::vector<ThresholdRow> arrival_thresholds(const Policy& policy, const ValueFunction& vf) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<ThresholdRow> rows;
  for (std::size_t step = 0; step < vf.n_steps; ++step) {
    ThresholdRow row{static_cast<double>(step) * vf.dt, nan, nan};
    const auto& s = vf.reachable->step(step);
    for (std::size_t i = 0; i < s.arrivals; ++i) {
      const double x = s.support[i].head();
      if (!policy.decide_detail(step, s.support[i], 0).intervene) continue;
      if (x < 0.0 && (std::isnan(row.lower) || x > row.lower)) row.lower = x;
      if (x >= 0.0 && (std::isnan(row.upper) || x < row.upper)) row.upper = x;
    }
    rows.push_back(row);
  }
  return rows;
}

struct LoadedPolicy {
  std::vector<ValueFunction> iterates;
  std::unique_ptr<DecisionRule> rule;
};

LoadedPolicy load_policy(const CommandOptions& opts, const RunConfig& cfg, const ProblemSpec& spec,
                         const TimeGrid& grid, const fs::path& out) {
  LoadedPolicy lp;
  const std::string dir = opts.policy_dir.value_or(out.string());
  if (dir == "none") {
    lp.rule = std::make_unique<NoIntervention>();
    return lp;
  }
  lp.iterates = load_value_functions(dir, spec);
  const auto& v = lp.iterates.front();
  if (v.dim != lifted_dimension(grid.delay_steps) || v.n_steps != grid.n_steps ||
      std::abs(v.dt - grid.dt) > 1e-15 * grid.dt) {
    throw ValidationError("policy artifacts in " + dir +
                          " do not match the config (lifted dimension, dt or step count)");
  }
  if (lp.iterates.size() < 2) throw ValidationError("policy artifacts need at least two iterates");
  const auto u_grid = impulse_grid(spec.impulse_set, cfg.solver.impulse_points);
  lp.rule = std::make_unique<Policy>(extract_policy(lp.iterates.back(),
                                                    lp.iterates[lp.iterates.size() - 2], spec, u_grid));
  return lp;
}

// Reachable-set values exist only on the quadrature lattice; paths for such
// a policy draw their increments from the same rule.
std::optional<DiscreteNoise> lattice_noise(const LoadedPolicy& lp, const RunConfig& cfg,
                                           const TimeGrid& grid) {
  if (lp.iterates.empty() || lp.iterates.front().backend != Backend::Grid ||
      lp.iterates.front().grid_kind != GridKind::Reachable) {
    return std::nullopt;
  }
  DiscreteNoise law;
  for (const auto& n : NoiseQuadrature::gauss_hermite(cfg.solver.quadrature_nodes, grid.dt).nodes) {
    law.increments.push_back(n.increment);
    law.weights.push_back(n.weight);
  }
  return law;
}

std::string csv_line(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  return out + "\n";
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
  if (opts.config_path.empty()) throw ValidationError("--config is required");
  RunConfig cfg = load_run_config(opts.config_path);
  if (opts.seed) set_seed(cfg, *opts.seed);
  if (opts.backend) cfg.solver.backend = *opts.backend;
  return cfg;
}

fs::path resolve_out_dir(const CommandOptions& opts, const RunConfig& cfg) {
  if (opts.out_dir) return *opts.out_dir;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  throw ValidationError("no output directory: pass --out or set output_dir in the config");
}

fs::path cmd_solve(const CommandOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path out = resolve_out_dir(opts, cfg);
  const ProblemSpec spec = make_problem(cfg);
  const TimeGrid grid = make_time_grid(cfg);

  const auto start = std::chrono::steady_clock::now();
  const SolveResult result = k_value_iteration(spec, grid, cfg.solver);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  fs::create_directories(out);
  const auto& last = result.iterates.back();
  const auto policy =
      extract_policy(last, result.iterates[result.iterates.size() - 2], spec, result.impulse_grid);
  const auto thresholds = last.backend == Backend::Grid && last.grid_kind == GridKind::Reachable
                              ? arrival_thresholds(policy, last)
                              : intervention_thresholds(policy, grid.dt, mesh(cfg.export_mesh));

  std::string conv = csv_line({"k", "sup_gap"});
  for (std::size_t k = 1; k < result.gaps.size(); ++k) {
    conv += csv_line({std::to_string(k), format_double(result.gaps[k])});
  }
  write_text(out / "convergence.csv", conv);

  std::string thr = csv_line({"t", "lower", "upper"});
  for (const auto& r : thresholds) {
    thr += csv_line({format_double(r.t), format_double(r.lower), format_double(r.upper)});
  }
  write_text(out / "thresholds.csv", thr);

  json gaps = json::array();
  for (const double g : result.gaps) gaps.push_back(number_or_null(g));
  json x0 = json::array();
  for (int j = 0; j < result.initial_state.dim(); ++j) x0.push_back(result.initial_state.lags[j]);
  json summary = {{"value_at_initial_state", result.initial_values[result.k_stop]},
                  {"values_by_k", result.initial_values},
                  {"sup_gaps", gaps},
                  {"k_stop", result.k_stop},
                  {"converged", result.converged},
                  {"lifted_dimension", last.dim},
                  {"n_steps", grid.n_steps},
                  {"dt", grid.dt},
                  {"backend", to_string(last.backend)},
                  {"impulse_grid_points", result.impulse_grid.size()},
                  {"initial_state", x0},
                  {"intervention_region_empty", intervention_region_empty(thresholds)}};
  if (last.backend == Backend::Grid) summary["grid_kind"] = to_string(last.grid_kind);
  write_json(out / "summary.json", summary);
  write_json(out / "timing.json", {{"wall_seconds", wall}});
  write_json(out / "config.json", to_json(cfg));
  save_value_functions(out, result.iterates);
  write_manifest(out, "solve", cfg);
  return out;
}

fs::path cmd_simulate(const CommandOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path out = resolve_out_dir(opts, cfg);
  const ProblemSpec spec = make_problem(cfg);
  const TimeGrid grid = make_time_grid(cfg);
  const auto lp = load_policy(opts, cfg, spec, grid, out);
  const std::size_t n = opts.paths.value_or(cfg.simulate_paths);
  const auto law = lattice_noise(lp, cfg, grid);
  const fs::path dir = out / "paths";
  fs::create_directories(dir);
  for (std::size_t i = 0; i < n; ++i) {
    const auto noise = law ? NoiseDraw::discrete(cfg.seed, i, grid.n_steps, spec.dim, grid.dt, *law)
                           : NoiseDraw::gaussian(cfg.seed, i, grid.n_steps, spec.dim, grid.dt);
    Trajectory traj;
    try {
      traj = simulate_with_rule(spec, *lp.rule, noise, grid);
    } catch (const RuntimeFailure& e) {
      throw RuntimeFailure("path " + std::to_string(i) + ": " + e.what());
    }
    std::ostringstream csv;
    write_trajectory_csv(csv, traj, spec.impulse_set.dim());
    char name[32];
    std::snprintf(name, sizeof name, "path_%04zu.csv", i);
    write_text(dir / name, csv.str());
  }
  write_manifest(dir, "simulate", cfg);
  return dir;
}

fs::path cmd_evaluate(const CommandOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path out = resolve_out_dir(opts, cfg);
  const ProblemSpec spec = make_problem(cfg);
  const TimeGrid grid = make_time_grid(cfg);
  const auto lp = load_policy(opts, cfg, spec, grid, out);
  const std::size_t n = opts.paths.value_or(cfg.n_paths);
  if (n < 2) throw ValidationError("evaluation needs at least 2 paths");

  const auto law = lattice_noise(lp, cfg, grid);
  const DiscreteNoise* lawp = law ? &*law : nullptr;
  const auto records = evaluate_paths(spec, *lp.rule, n, cfg.seed, grid, lawp);
  const auto baseline = evaluate_paths(spec, NoIntervention{}, n, cfg.seed, grid, lawp);
  auto payoffs = [](const std::vector<PathRecord>& rs) {
    std::vector<double> v;
    for (const auto& r : rs) v.push_back(r.payoff);
    return v;
  };
  const auto est = summarize(payoffs(records));
  const auto base = summarize(payoffs(baseline));
  const double combined = std::sqrt(est.std_error * est.std_error + base.std_error * base.std_error);

  json report = {{"policy", estimate_json(est)},
                 {"baseline", estimate_json(base)},
                 {"improvement", est.mean - base.mean},
                 {"combined_std_error", combined},
                 {"significant_improvement", est.mean - base.mean > 3.0 * combined},
                 {"seed", cfg.seed}};
  if (!lp.iterates.empty()) {
    const auto x0 = initial_lifted_state(spec, grid);
    const double v_k = lp.iterates.back().value(0, x0);
    const double v_0 = lp.iterates.front().value(0, x0);
    const auto check = check_impulse_count_bound(records, v_k, v_0, spec.cost_floor);
    report["impulse_count"] = {{"max", check.max_count},
                               {"mean", check.mean_count},
                               {"bound", check.bound},
                               {"bound_satisfied", check.satisfied}};
  }
  const fs::path dir = out / "evaluation";
  write_json(dir / "evaluation.json", report);
  write_manifest(dir, "evaluate", cfg);
  return dir;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("slope needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw ValidationError("log-log slope needs positive values");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw ValidationError("log-log slope needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

fs::path cmd_probe_flow(const CommandOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  if (!cfg.probe) throw ConfigError("probe", "missing required section for probe-flow");
  const auto& pc = *cfg.probe;
  const fs::path out = resolve_out_dir(opts, cfg);
  const ProblemSpec spec = make_problem(cfg);
  const TimeGrid grid = make_time_grid(cfg);
  const ImpulseControl prefix(pc.prefix), suffix(pc.suffix);
  const std::size_t n = opts.paths.value_or(pc.n_paths);

  auto impulse = [](double u) {
    Vector v(1);
    v[0] = u;
    return v;
  };
  std::string csv = csv_line({"dt_offset", "du_offset", "distance", "moment", "std_error"});
  json rows = json::array();
  std::vector<double> dist, moment;
  for (const auto& [dt, du] : pc.offsets) {
    const TimedImpulse a{pc.time, impulse(pc.impulse)};
    const TimedImpulse b{pc.time + dt, impulse(pc.impulse + du)};
    const auto est = flow_stability_probe(spec, prefix, a, b, suffix, n, cfg.seed, grid);
    const double d = std::hypot(dt, du);
    csv += csv_line({format_double(dt), format_double(du), format_double(d),
                     format_double(est.mean), format_double(est.std_error)});
    rows.push_back({{"dt_offset", dt},
                    {"du_offset", du},
                    {"distance", d},
                    {"moment", est.mean},
                    {"std_error", est.std_error}});
    if (d > 0.0 && est.mean > 0.0) {
      dist.push_back(d);
      moment.push_back(est.mean);
    }
  }
  const fs::path dir = out / "probe";
  write_text(dir / "probe.csv", csv);
  json report = {{"rows", rows},
                 {"exponent", 4 + 2 * spec.impulse_set.dim()},
                 {"n_paths", n},
                 {"seed", cfg.seed}};
  report["loglog_slope"] = dist.size() >= 2 ? json(loglog_slope(dist, moment)) : json(nullptr);
  write_json(dir / "probe.json", report);
  write_manifest(dir, "probe-flow", cfg);
  return dir;
}

fs::path cmd_export_figures(const CommandOptions& opts) {
  fs::path artifacts;
  RunConfig cfg;
  if (opts.artifacts_dir) {
    artifacts = *opts.artifacts_dir;
    cfg = opts.config_path.empty() ? run_config_from_json(read_json(artifacts / "config.json"))
                                   : resolve_config(opts);
  } else {
    cfg = resolve_config(opts);
    artifacts = resolve_out_dir(opts, cfg);
  }
  const ProblemSpec spec = make_problem(cfg);
  const TimeGrid grid = make_time_grid(cfg);
  const auto iterates = load_value_functions(artifacts, spec);
  if (iterates.size() < 2) throw ValidationError("figure export needs at least two iterates");
  const auto& last = iterates.back();
  if (last.backend == Backend::Grid && last.grid_kind == GridKind::Reachable) {
    throw ValidationError("figure export needs a tensor grid or regression value function");
  }
  if (last.dim != lifted_dimension(grid.delay_steps) || last.n_steps != grid.n_steps) {
    throw ValidationError("artifacts do not match the config");
  }
  const auto u_grid = impulse_grid(spec.impulse_set, cfg.solver.impulse_points);
  const auto policy = extract_policy(last, iterates[iterates.size() - 2], spec, u_grid);
  const auto xs = mesh(cfg.export_mesh);

  std::string values = csv_line({"t", "x", "value"});
  std::string actions = csv_line({"t", "x", "action"});
  for (std::size_t step = 0; step <= grid.n_steps; ++step) {
    const std::string t = format_double(grid.time(static_cast<std::ptrdiff_t>(step)));
    for (const double x : xs) {
      Vector head(1);
      head[0] = x;
      const auto state = AugmentedState::constant(last.dim, x);
      const double v = step == grid.n_steps ? spec.terminal_reward(head) : last.value(step, state);
      values += csv_line({t, format_double(x), format_double(v)});
      std::string action = "continue";
      if (step < grid.n_steps) {
        const auto d = policy.decide_detail(step, state, 0);
        if (d.intervene) action = format_double(d.impulse[0]);
      }
      actions += csv_line({t, format_double(x), action});
    }
  }
  const fs::path dir = artifacts / "figures";
  write_text(dir / "value_surface.csv", values);
  write_text(dir / "policy_surface.csv", actions);
  write_manifest(dir, "export-figures", cfg);
  return dir;
}

fs::path cmd_check_assumptions(const CommandOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path out = resolve_out_dir(opts, cfg);
  const ProblemSpec spec = make_problem(cfg);
  const auto report = check_assumptions(spec, cfg.assumptions);
  json checks = json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"advisory", c.advisory},
                      {"statistic", number_or_null(c.statistic)},
                      {"comparison", c.comparison},
                      {"limit", c.limit},
                      {"witness", c.witness}});
  }
  const fs::path dir = out / "assumptions";
  write_json(dir / "assumptions.json", {{"samples", report.samples},
                                        {"seed", report.seed},
                                        {"passed", report.passed()},
                                        {"checks", checks}});
  write_manifest(dir, "check-assumptions", cfg);
  return dir;
}

fs::path cmd_oracle_compare(const CommandOptions& opts) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path out = resolve_out_dir(opts, cfg);
  ProblemSpec spec = make_problem(cfg);
  const TimeGrid grid = make_time_grid(cfg);
  auto u_grid = impulse_grid(spec.impulse_set, cfg.solver.impulse_points);
  const auto problem = make_tree_problem(fs::path(opts.config_path).stem().string(), std::move(spec),
                                         grid, tree_quadrature(cfg.solver.quadrature_nodes, cfg.dt),
                                         std::move(u_grid));
  const auto rows = compare_with_oracle(problem, cfg.solver.k_max);
  json jrows = json::array();
  bool passed = true;
  for (const auto& r : rows) {
    const double diff = std::abs(r.dp_value - r.oracle_value);
    passed = passed && diff <= 1e-9 && r.table_match;
    jrows.push_back({{"k", r.k},
                     {"dp_value", r.dp_value},
                     {"oracle_value", r.oracle_value},
                     {"abs_diff", diff},
                     {"policy_value", r.policy_value},
                     {"table_match", r.table_match},
                     {"oracle_table", table_to_json(problem, r.oracle_table)},
                     {"policy_table", table_to_json(problem, r.policy_table)}});
  }
  const fs::path dir = out / "oracle";
  write_json(dir / "oracle_compare.json", {{"instance", problem.name}, {"passed", passed}, {"rows", jrows}});
  write_manifest(dir, "oracle-compare", cfg);
  return dir;
}

}  // namespace impulse
