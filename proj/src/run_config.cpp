#include "impulse/run_config.hpp"

#include <fstream>
#include <sstream>

namespace impulse {

using nlohmann::json;
using namespace json_util;

namespace {

std::size_t get_count(const json& obj, const std::string& key, std::size_t fallback,
                      const std::string& where) {
  const long long v = get_integer_or(obj, key, static_cast<long long>(fallback), where);
  if (v < 1) throw ConfigError(where + "." + key, "must be >= 1");
  return static_cast<std::size_t>(v);
}

const json& section_or_empty(const json& j, const std::string& key) {
  static const json empty = json::object();
  return j.contains(key) ? j.at(key) : empty;
}

std::vector<ImpulseEvent> parse_events(const json& obj, const std::string& key,
                                       const std::string& where) {
  std::vector<ImpulseEvent> out;
  if (!obj.contains(key)) return out;
  const auto& arr = obj.at(key);
  const std::string field = where + "." + key;
  if (!arr.is_array()) throw ConfigError(field, "expected an array of [time, impulse] pairs");
  for (const auto& e : arr) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw ConfigError(field, "expected an array of [time, impulse] pairs");
    }
    Vector u(1);
    u[0] = e[1].get<double>();
    out.push_back({e[0].get<double>(), u});
  }
  return out;
}

json events_json(const std::vector<ImpulseEvent>& events) {
  json arr = json::array();
  for (const auto& e : events) arr.push_back({e.time, e.impulse[0]});
  return arr;
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  require_known_keys(j,
                     {"problem", "discretization", "solver", "evaluation", "output_dir", "probe",
                      "export", "assumptions"},
                     "config");
  RunConfig cfg;
  if (!j.contains("problem")) throw ConfigError("problem", "missing required section");
  cfg.problem = problem_config_from_json(j.at("problem"), "problem");

  // discretization
  if (!j.contains("discretization")) throw ConfigError("discretization", "missing required section");
  const auto& disc = j.at("discretization");
  require_known_keys(disc, {"dt", "grid", "impulse_points", "quadrature_nodes"}, "discretization");
  cfg.dt = get_number(disc, "dt", "discretization");
  if (!(cfg.dt > 0.0)) throw ConfigError("discretization.dt", "must be > 0");
  auto& so = cfg.solver;
  const auto& grid = section_or_empty(disc, "grid");
  require_known_keys(grid, {"kind", "half_width", "points_per_axis"}, "discretization.grid");
  if (grid.contains("kind")) {
    const auto kind = get_string(grid, "kind", "discretization.grid");
    if (kind == "tensor") so.grid_kind = GridKind::Tensor;
    else if (kind == "reachable") so.grid_kind = GridKind::Reachable;
    else throw ConfigError("discretization.grid.kind", "expected \"tensor\" or \"reachable\"");
  }
  so.half_width = get_number_or(grid, "half_width", so.half_width, "discretization.grid");
  if (!(so.half_width > 0.0)) throw ConfigError("discretization.grid.half_width", "must be > 0");
  so.points_per_axis = static_cast<int>(get_integer_or(grid, "points_per_axis", so.points_per_axis,
                                                       "discretization.grid"));
  if (so.points_per_axis < 2) throw ConfigError("discretization.grid.points_per_axis", "must be >= 2");
  so.impulse_points = static_cast<int>(
      get_count(disc, "impulse_points", static_cast<std::size_t>(so.impulse_points), "discretization"));
  so.quadrature_nodes = static_cast<int>(get_count(
      disc, "quadrature_nodes", static_cast<std::size_t>(so.quadrature_nodes), "discretization"));
  if (so.quadrature_nodes < 2) throw ConfigError("discretization.quadrature_nodes", "must be >= 2");

  try {
    TimeGrid::make(cfg.problem.horizon, cfg.problem.delay, cfg.dt);
  } catch (const ValidationError& e) {
    throw ConfigError("discretization.dt", e.what());
  }

  // solver
  const auto& solver = section_or_empty(j, "solver");
  require_known_keys(solver, {"backend", "k_max", "tol", "regression"}, "solver");
  if (solver.contains("backend")) {
    const auto b = get_string(solver, "backend", "solver");
    if (b == "grid") so.backend = Backend::Grid;
    else if (b == "regression") so.backend = Backend::Regression;
    else throw ConfigError("solver.backend", "expected \"grid\" or \"regression\"");
  }
  so.k_max = get_count(solver, "k_max", so.k_max, "solver");
  so.tol = get_number_or(solver, "tol", so.tol, "solver");
  if (!(so.tol > 0.0)) throw ConfigError("solver.tol", "must be > 0");
  const auto& reg = section_or_empty(solver, "regression");
  require_known_keys(reg, {"degree", "ridge", "samples", "exploration_rate"}, "solver.regression");
  so.regression.degree = static_cast<int>(
      get_integer_or(reg, "degree", so.regression.degree, "solver.regression"));
  if (so.regression.degree < 0) throw ConfigError("solver.regression.degree", "must be >= 0");
  so.regression.ridge = get_number_or(reg, "ridge", so.regression.ridge, "solver.regression");
  if (so.regression.ridge < 0.0) throw ConfigError("solver.regression.ridge", "must be >= 0");
  so.regression.samples = get_count(reg, "samples", so.regression.samples, "solver.regression");
  so.regression.exploration_rate =
      get_number_or(reg, "exploration_rate", so.regression.exploration_rate, "solver.regression");
  if (so.regression.exploration_rate < 0.0 || so.regression.exploration_rate > 1.0) {
    throw ConfigError("solver.regression.exploration_rate", "must be in [0, 1]");
  }

  // evaluation
  if (!j.contains("evaluation")) throw ConfigError("evaluation", "missing required section");
  const auto& ev = j.at("evaluation");
  require_known_keys(ev, {"n_paths", "seed", "simulate_paths"}, "evaluation");
  cfg.n_paths = get_count(ev, "n_paths", cfg.n_paths, "evaluation");
  if (cfg.n_paths < 2) throw ConfigError("evaluation.n_paths", "must be >= 2");
  cfg.simulate_paths = get_count(ev, "simulate_paths", cfg.simulate_paths, "evaluation");
  const long long seed = get_integer(ev, "seed", "evaluation");
  if (seed < 0) throw ConfigError("evaluation.seed", "must be >= 0");
  set_seed(cfg, static_cast<std::uint64_t>(seed));

  if (j.contains("output_dir")) cfg.output_dir = get_string(j, "output_dir", "config");

  if (j.contains("probe")) {
    const auto& p = j.at("probe");
    require_known_keys(p, {"time", "impulse", "prefix", "suffix", "offsets", "n_paths"}, "probe");
    ProbeConfig probe;
    probe.time = get_number(p, "time", "probe");
    probe.impulse = get_number(p, "impulse", "probe");
    probe.prefix = parse_events(p, "prefix", "probe");
    probe.suffix = parse_events(p, "suffix", "probe");
    probe.n_paths = get_count(p, "n_paths", probe.n_paths, "probe");
    if (probe.n_paths < 2) throw ConfigError("probe.n_paths", "must be >= 2");
    if (!p.contains("offsets") || !p.at("offsets").is_array() || p.at("offsets").empty()) {
      throw ConfigError("probe.offsets", "expected a nonempty array of [dt, du] pairs");
    }
    for (const auto& o : p.at("offsets")) {
      if (!o.is_array() || o.size() != 2 || !o[0].is_number() || !o[1].is_number()) {
        throw ConfigError("probe.offsets", "expected a nonempty array of [dt, du] pairs");
      }
      probe.offsets.emplace_back(o[0].get<double>(), o[1].get<double>());
    }
    cfg.probe = std::move(probe);
  }

  const auto& ex = section_or_empty(j, "export");
  require_known_keys(ex, {"x_min", "x_max", "x_points"}, "export");
  cfg.export_mesh.x_min = get_number_or(ex, "x_min", cfg.export_mesh.x_min, "export");
  cfg.export_mesh.x_max = get_number_or(ex, "x_max", cfg.export_mesh.x_max, "export");
  cfg.export_mesh.x_points =
      static_cast<int>(get_integer_or(ex, "x_points", cfg.export_mesh.x_points, "export"));
  if (!(cfg.export_mesh.x_min < cfg.export_mesh.x_max)) {
    throw ConfigError("export.x_min", "must be below export.x_max");
  }
  if (cfg.export_mesh.x_points < 2) throw ConfigError("export.x_points", "must be >= 2");

  const auto& as = section_or_empty(j, "assumptions");
  require_known_keys(as, {"samples", "radius", "lipschitz_limit", "growth_constant"}, "assumptions");
  auto& ao = cfg.assumptions;
  ao.sample_budget = get_count(as, "samples", ao.sample_budget, "assumptions");
  ao.radius = get_number_or(as, "radius", ao.radius, "assumptions");
  if (!(ao.radius > 0.0)) throw ConfigError("assumptions.radius", "must be > 0");
  ao.lipschitz_limit = get_number_or(as, "lipschitz_limit", ao.lipschitz_limit, "assumptions");
  ao.growth_constant = get_number_or(as, "growth_constant", ao.growth_constant, "assumptions");
  ao.advisory = cfg.problem.advisory_checks;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

json to_json(const RunConfig& cfg) {
  const auto& so = cfg.solver;
  json j;
  j["problem"] = to_json(cfg.problem);
  j["discretization"] = {
      {"dt", cfg.dt},
      {"grid",
       {{"kind", to_string(so.grid_kind)},
        {"half_width", so.half_width},
        {"points_per_axis", so.points_per_axis}}},
      {"impulse_points", so.impulse_points},
      {"quadrature_nodes", so.quadrature_nodes}};
  j["solver"] = {{"backend", to_string(so.backend)},
                 {"k_max", so.k_max},
                 {"tol", so.tol},
                 {"regression",
                  {{"degree", so.regression.degree},
                   {"ridge", so.regression.ridge},
                   {"samples", so.regression.samples},
                   {"exploration_rate", so.regression.exploration_rate}}}};
  j["evaluation"] = {
      {"n_paths", cfg.n_paths}, {"seed", cfg.seed}, {"simulate_paths", cfg.simulate_paths}};
  if (!cfg.output_dir.empty()) j["output_dir"] = cfg.output_dir;
  if (cfg.probe) {
    json offsets = json::array();
    for (const auto& [dt, du] : cfg.probe->offsets) offsets.push_back({dt, du});
    j["probe"] = {{"time", cfg.probe->time},
                  {"impulse", cfg.probe->impulse},
                  {"prefix", events_json(cfg.probe->prefix)},
                  {"suffix", events_json(cfg.probe->suffix)},
                  {"offsets", offsets},
                  {"n_paths", cfg.probe->n_paths}};
  }
  j["export"] = {{"x_min", cfg.export_mesh.x_min},
                 {"x_max", cfg.export_mesh.x_max},
                 {"x_points", cfg.export_mesh.x_points}};
  j["assumptions"] = {{"samples", cfg.assumptions.sample_budget},
                      {"radius", cfg.assumptions.radius},
                      {"lipschitz_limit", cfg.assumptions.lipschitz_limit},
                      {"growth_constant", cfg.assumptions.growth_constant}};
  return j;
}

void set_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.solver.regression.seed = seed;
  cfg.assumptions.seed = seed;
}

TimeGrid make_time_grid(const RunConfig& cfg) {
  return TimeGrid::make(cfg.problem.horizon, cfg.problem.delay, cfg.dt);
}

ProblemSpec make_problem(const RunConfig& cfg) { return build_problem(cfg.problem, cfg.dt); }

}  // namespace impulse
