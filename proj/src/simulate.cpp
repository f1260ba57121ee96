#include "impulse/simulate.hpp"

#include "impulse/format.hpp"
#include "impulse/rng.hpp"

#include <cmath>
#include <ostream>
#include <string>

namespace impulse {

namespace {

constexpr double kOverflowBound = 1e9;

bool integer_multiple(double value, double dt, std::size_t& count) {
  const double ratio = value / dt;
  const long long n = std::llround(ratio);
  if (n < 0) return false;
  count = static_cast<std::size_t>(n);
  return std::abs(ratio - static_cast<double>(n)) <= 1e-9 * std::max(1.0, ratio);
}

// Impulses to apply at one grid step, given the path so far.
template <typename Scheduler>
Trajectory run_path(const ProblemSpec& spec, const NoiseDraw& noise, const TimeGrid& grid,
                    Scheduler&& scheduled) {
  const int d = spec.dim;
  if (noise.steps() != grid.n_steps || noise.increments.cols() != d) {
    throw ValidationError("noise shape does not match the time grid and state dimension");
  }
  if (spec.initial_segment.size() != grid.delay_steps + 1) {
    throw ValidationError("initial segment needs delay_steps + 1 samples");
  }

  Trajectory traj;
  traj.dt = grid.dt;
  traj.history.assign(spec.initial_segment.begin(), spec.initial_segment.end() - 1);
  traj.grid_times.resize(grid.n_steps + 1);
  for (std::size_t k = 0; k <= grid.n_steps; ++k) traj.grid_times[k] = grid.time(static_cast<std::ptrdiff_t>(k));
  traj.values.reserve(grid.n_steps + 1);

  Vector x = spec.initial_value();
  Vector dw(d);
  for (std::size_t k = 0; k < grid.n_steps; ++k) {
    const double t = traj.grid_times[k];
    traj.values.push_back(x);
    scheduled(k, traj, [&](const Vector& u) {
      TrajectoryImpulse rec{k, x, u, spec.intervention(x, u)};
      x = rec.post;
      traj.values.back() = x;
      traj.impulses.push_back(std::move(rec));
    });
    const Vector& delayed =
        k >= grid.delay_steps ? traj.values[k - grid.delay_steps]
                              : traj.history[traj.history.size() - (grid.delay_steps - k)];
    for (int i = 0; i < d; ++i) dw[i] = noise.increments(static_cast<Eigen::Index>(k), i);
    x = x + spec.drift(t, x, delayed) * grid.dt + spec.diffusion(t, x, delayed) * dw;
    if (!x.allFinite() || x.norm() > kOverflowBound) {
      throw RuntimeFailure("state overflow at step " + std::to_string(k + 1));
    }
  }
  traj.values.push_back(x);
  return traj;
}

AugmentedState lifted_state(const Trajectory& traj, std::size_t k, std::size_t delay_steps) {
  return augment_history(traj, k, delay_steps);
}

template <typename PathFn>
std::vector<PathRecord> evaluate_each(std::size_t n_paths, PathFn&& fn) {
  std::vector<PathRecord> out;
  out.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    try {
      out.push_back(fn(i));
    } catch (const RuntimeFailure& e) {
      throw RuntimeFailure("path " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

PathRecord record_of(const ProblemSpec& spec, const Trajectory& traj) {
  const auto parts = payoff_breakdown(spec, traj, realized_control(traj));
  return {parts.total(), parts.running + parts.terminal, parts.impulse_cost, traj.impulses.size()};
}

}  // namespace

TimeGrid TimeGrid::make(double horizon, double delay, double dt) {
  if (!(dt > 0.0)) throw ValidationError("dt must be > 0");
  if (!(horizon > 0.0)) throw ValidationError("horizon must be > 0");
  TimeGrid grid;
  grid.dt = dt;
  if (!integer_multiple(horizon, dt, grid.n_steps) || grid.n_steps == 0) {
    throw ValidationError("horizon is not an integer multiple of dt");
  }
  if (!integer_multiple(delay, dt, grid.delay_steps)) {
    throw ValidationError("delay is not an integer multiple of dt");
  }
  return grid;
}

std::size_t TimeGrid::index_of(double t) const {
  const double ratio = t / dt;
  const long long k = std::llround(ratio);
  if (k < 0 || static_cast<std::size_t>(k) > n_steps ||
      std::abs(ratio - static_cast<double>(k)) > 1e-9 * std::max(1.0, ratio)) {
    throw ValidationError("time " + format_double(t) + " is not on the simulation grid");
  }
  return static_cast<std::size_t>(k);
}

NoiseDraw NoiseDraw::gaussian(std::uint64_t seed, std::uint64_t path, std::size_t n_steps, int dim,
                              double dt) {
  const CounterRng rng(seed, kBrownianStream);
  NoiseDraw draw;
  draw.seed = seed;
  draw.path = path;
  draw.dt = dt;
  draw.increments.resize(static_cast<Eigen::Index>(n_steps), dim);
  const double scale = std::sqrt(dt);
  for (std::size_t k = 0; k < n_steps; ++k) {
    for (int i = 0; i < dim; ++i) {
      draw.increments(static_cast<Eigen::Index>(k), i) = scale * rng.normal(path, k, static_cast<std::uint64_t>(i));
    }
  }
  return draw;
}

NoiseDraw NoiseDraw::discrete(std::uint64_t seed, std::uint64_t path, std::size_t n_steps, int dim,
                              double dt, const DiscreteNoise& law) {
  if (law.increments.empty() || law.increments.size() != law.weights.size()) {
    throw ValidationError("discrete noise law needs matching, nonempty increments and weights");
  }
  const CounterRng rng(seed, kBrownianStream);
  NoiseDraw draw;
  draw.seed = seed;
  draw.path = path;
  draw.dt = dt;
  draw.increments.resize(static_cast<Eigen::Index>(n_steps), dim);
  for (std::size_t k = 0; k < n_steps; ++k) {
    for (int i = 0; i < dim; ++i) {
      const double u = rng.uniform(path, k, static_cast<std::uint64_t>(i));
      std::size_t j = 0;
      double acc = law.weights[0];
      while (u > acc && j + 1 < law.weights.size()) acc += law.weights[++j];
      draw.increments(static_cast<Eigen::Index>(k), i) = law.increments[j];
    }
  }
  return draw;
}

NoiseDraw NoiseDraw::from_increments(Eigen::MatrixXd increments, double dt) {
  NoiseDraw draw;
  draw.increments = std::move(increments);
  draw.dt = dt;
  return draw;
}

Trajectory simulate_controlled(const ProblemSpec& spec, const ImpulseControl& control,
                               const NoiseDraw& noise, const TimeGrid& grid) {
  control.validate(spec.impulse_set, grid.horizon());
  // Bucket active events by grid step, preserving order.
  std::vector<std::vector<Vector>> by_step(grid.n_steps);
  for (const auto& e : control.events()) {
    const std::size_t k = grid.index_of(e.time);
    if (!before_horizon(e.time, grid.horizon())) continue;
    by_step[k].push_back(e.impulse);
  }
  return run_path(spec, noise, grid, [&](std::size_t k, const Trajectory&, auto&& apply) {
    for (const auto& u : by_step[k]) apply(u);
  });
}

Trajectory simulate_with_rule(const ProblemSpec& spec, const DecisionRule& rule,
                              const NoiseDraw& noise, const TimeGrid& grid) {
  if (spec.dim != 1) throw ValidationError("feedback rules need a scalar state");
  return run_path(spec, noise, grid, [&](std::size_t k, const Trajectory& traj, auto&& apply) {
    const auto u = rule.decide(k, lifted_state(traj, k, grid.delay_steps), traj.impulses.size());
    if (!u) return;
    if (!spec.impulse_set.contains(*u)) throw ValidationError("decision rule chose an impulse outside U");
    apply(*u);
  });
}

MonteCarloEstimate summarize(const std::vector<double>& samples) {
  const std::size_t n = samples.size();
  if (n < 2) throw ValidationError("need at least two samples");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : samples) ss += (v - mean) * (v - mean);
  const double var = ss / static_cast<double>(n - 1);
  return {mean, std::sqrt(var / static_cast<double>(n)), n};
}

std::vector<PathRecord> evaluate_paths(const ProblemSpec& spec, const DecisionRule& rule,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const TimeGrid& grid, const DiscreteNoise* law) {
  return evaluate_each(n_paths, [&](std::size_t i) {
    const auto noise = law ? NoiseDraw::discrete(seed, i, grid.n_steps, spec.dim, grid.dt, *law)
                           : NoiseDraw::gaussian(seed, i, grid.n_steps, spec.dim, grid.dt);
    return record_of(spec, simulate_with_rule(spec, rule, noise, grid));
  });
}

std::vector<PathRecord> evaluate_paths(const ProblemSpec& spec, const ImpulseControl& control,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const TimeGrid& grid) {
  return evaluate_each(n_paths, [&](std::size_t i) {
    const auto noise = NoiseDraw::gaussian(seed, i, grid.n_steps, spec.dim, grid.dt);
    const auto traj = simulate_controlled(spec, control, noise, grid);
    const auto parts = payoff_breakdown(spec, traj, control);
    return PathRecord{parts.total(), parts.running + parts.terminal, parts.impulse_cost,
                      traj.impulses.size()};
  });
}

namespace {

MonteCarloEstimate summarize_payoffs(const std::vector<PathRecord>& records) {
  std::vector<double> payoffs;
  payoffs.reserve(records.size());
  for (const auto& r : records) payoffs.push_back(r.payoff);
  return summarize(payoffs);
}

}  // namespace

MonteCarloEstimate estimate_J(const ProblemSpec& spec, const DecisionRule& rule,
                              std::size_t n_paths, std::uint64_t seed, const TimeGrid& grid) {
  if (n_paths < 2) throw ValidationError("estimate_J needs n_paths >= 2");
  return summarize_payoffs(evaluate_paths(spec, rule, n_paths, seed, grid));
}

MonteCarloEstimate estimate_J(const ProblemSpec& spec, const ImpulseControl& control,
                              std::size_t n_paths, std::uint64_t seed, const TimeGrid& grid) {
  if (n_paths < 2) throw ValidationError("estimate_J needs n_paths >= 2");
  return summarize_payoffs(evaluate_paths(spec, control, n_paths, seed, grid));
}

MonteCarloEstimate flow_stability_probe(const ProblemSpec& spec, const ImpulseControl& prefix,
                                        const TimedImpulse& pair_a, const TimedImpulse& pair_b,
                                        const ImpulseControl& suffix, std::size_t n_paths,
                                        std::uint64_t seed, const TimeGrid& grid) {
  if (n_paths < 2) throw ValidationError("the flow probe needs n_paths >= 2");
  grid.index_of(pair_a.time);
  const std::size_t start = grid.index_of(pair_b.time);
  const double T = grid.horizon();
  const auto control_a = compose_controls(
      compose_controls(prefix, ImpulseControl({{pair_a.time, pair_a.impulse}}), T), suffix, T);
  const auto control_b = compose_controls(
      compose_controls(prefix, ImpulseControl({{pair_b.time, pair_b.impulse}}), T), suffix, T);
  const double power = 4.0 + 2.0 * spec.impulse_set.dim();

  std::vector<double> samples;
  samples.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const auto noise = NoiseDraw::gaussian(seed, i, grid.n_steps, spec.dim, grid.dt);
    try {
      const auto a = simulate_controlled(spec, control_a, noise, grid);
      const auto b = simulate_controlled(spec, control_b, noise, grid);
      double sup = 0.0;
      for (std::size_t k = start; k < a.values.size(); ++k) {
        sup = std::max(sup, (a.values[k] - b.values[k]).norm());
      }
      samples.push_back(std::pow(sup, power));
    } catch (const RuntimeFailure& e) {
      throw RuntimeFailure("path " + std::to_string(i) + ": " + e.what());
    }
  }
  return summarize(samples);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int impulse_dim,
                          bool with_header, std::optional<std::size_t> path_id) {
  const int d = traj.values.empty() ? 1 : static_cast<int>(traj.values.front().size());
  if (with_header) {
    if (path_id) out << "path_id,";
    out << "time";
    for (int i = 1; i <= d; ++i) out << ",value_" << i;
    out << ",impulse_flag";
    if (impulse_dim == 1) {
      out << ",impulse_value";
    } else {
      for (int i = 1; i <= impulse_dim; ++i) out << ",impulse_value_" << i;
    }
    out << '\n';
  }
  std::size_t next = 0;
  for (std::size_t k = 0; k < traj.values.size(); ++k) {
    if (path_id) out << *path_id << ',';
    out << format_double(traj.grid_times[k]);
    for (int i = 0; i < d; ++i) out << ',' << format_double(traj.values[k][i]);
    std::vector<const Vector*> here;
    while (next < traj.impulses.size() && traj.impulses[next].grid_index == k) {
      here.push_back(&traj.impulses[next].impulse);
      ++next;
    }
    out << ',' << here.size();
    for (int i = 0; i < impulse_dim; ++i) {
      out << ',';
      for (std::size_t j = 0; j < here.size(); ++j) {
        if (j) out << ';';
        out << format_double((*here[j])[i]);
      }
    }
    out << '\n';
  }
}

}  // namespace impulse
