#pragma once

#include "impulse/core.hpp"
#include "impulse/lattice.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace impulse {

/// Uniform grid t_k = k dt, k = -delay_steps .. n_steps.
struct TimeGrid {
  double dt = 0.0;
  std::size_t n_steps = 0;
  std::size_t delay_steps = 0;

  /// Throws ValidationError unless horizon and delay are integer multiples of dt.
  static TimeGrid make(double horizon, double delay, double dt);

  double time(std::ptrdiff_t k) const { return static_cast<double>(k) * dt; }
  double horizon() const { return time(static_cast<std::ptrdiff_t>(n_steps)); }
  /// Grid index of `t`; throws if `t` is off the grid.
  std::size_t index_of(double t) const;
};

/// Finite increment law, e.g. the nodes of a quadrature rule.
struct DiscreteNoise {
  std::vector<double> increments;
  std::vector<double> weights;
};

/// Brownian increments, one row per grid step, entries ~ N(0, dt).
struct NoiseDraw {
  Eigen::MatrixXd increments;
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
  double dt = 0.0;

  std::size_t steps() const { return static_cast<std::size_t>(increments.rows()); }

  /// Reproducible from (seed, path, shape) alone.
  static NoiseDraw gaussian(std::uint64_t seed, std::uint64_t path, std::size_t n_steps, int dim,
                            double dt);
  /// Entries drawn from `law` by inversion, one lane per coordinate.
  static NoiseDraw discrete(std::uint64_t seed, std::uint64_t path, std::size_t n_steps, int dim,
                            double dt, const DiscreteNoise& law);
  static NoiseDraw from_increments(Eigen::MatrixXd increments, double dt);
};

/// Feedback intervention rule evaluated on the lifted state at each step.
class DecisionRule {
 public:
  virtual ~DecisionRule() = default;
  /// Impulse to apply at grid step `step`, or nullopt to continue.
  /// `impulses_used` counts impulses already applied along the path.
  virtual std::optional<Vector> decide(std::size_t step, const AugmentedState& state,
                                       std::size_t impulses_used) const = 0;
};

class NoIntervention final : public DecisionRule {
 public:
  std::optional<Vector> decide(std::size_t, const AugmentedState&, std::size_t) const override {
    return std::nullopt;
  }
};

/// Euler-Maruyama path under a fixed control. Impulses scheduled at t_k act on
/// X_{t_k-} before the Euler step from t_k; events at or after the horizon are
/// inert. Several events at one grid time are applied in order.
Trajectory simulate_controlled(const ProblemSpec& spec, const ImpulseControl& control,
                               const NoiseDraw& noise, const TimeGrid& grid);

/// Euler-Maruyama path under a feedback rule (scalar problems only).
Trajectory simulate_with_rule(const ProblemSpec& spec, const DecisionRule& rule,
                              const NoiseDraw& noise, const TimeGrid& grid);

struct PathRecord {
  double payoff = 0.0;
  double reward = 0.0;  // running + terminal part
  double impulse_cost = 0.0;
  std::size_t impulses = 0;
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

MonteCarloEstimate summarize(const std::vector<double>& samples);

/// Per-path payoffs; path i uses NoiseDraw::gaussian(seed, i, ...), or
/// NoiseDraw::discrete when `law` is given.
std::vector<PathRecord> evaluate_paths(const ProblemSpec& spec, const DecisionRule& rule,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const TimeGrid& grid, const DiscreteNoise* law = nullptr);
std::vector<PathRecord> evaluate_paths(const ProblemSpec& spec, const ImpulseControl& control,
                                       std::size_t n_paths, std::uint64_t seed,
                                       const TimeGrid& grid);

/// Sample mean and standard error of the payoff over n_paths >= 2 paths.
MonteCarloEstimate estimate_J(const ProblemSpec& spec, const DecisionRule& rule,
                              std::size_t n_paths, std::uint64_t seed, const TimeGrid& grid);
MonteCarloEstimate estimate_J(const ProblemSpec& spec, const ImpulseControl& control,
                              std::size_t n_paths, std::uint64_t seed, const TimeGrid& grid);

struct TimedImpulse {
  double time = 0.0;
  Vector impulse;
};

/// Couples prefix o (t, u) o suffix and prefix o (t^, u^) o suffix on common
/// noise and estimates E[ sup_{s >= t^} |X - X^|^(4 + 2 m_U) ].
MonteCarloEstimate flow_stability_probe(const ProblemSpec& spec, const ImpulseControl& prefix,
                                        const TimedImpulse& pair_a, const TimedImpulse& pair_b,
                                        const ImpulseControl& suffix, std::size_t n_paths,
                                        std::uint64_t seed, const TimeGrid& grid);

/// CSV with columns [path_id,] time, value_1..value_d, impulse_flag,
/// impulse_value (impulse_value_1.. for vector impulses). impulse_flag counts
/// the impulses at that time; multiple impulses are joined with ';'.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj, int impulse_dim = 1,
                          bool with_header = true,
                          std::optional<std::size_t> path_id = std::nullopt);

}  // namespace impulse
