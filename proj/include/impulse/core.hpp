#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace impulse {

// State and impulse vectors live inline (no heap) up to kMaxDim entries.
inline constexpr int kMaxDim = 8;
using Vector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

/// Raised when an input violates a documented precondition.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical computation fails at run time (overflow, NaN).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Closed box [lower, upper] in R^m; the admissible impulse set.
struct ImpulseBox {
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Vector& u, double slack = 1e-12) const;
};

using DriftFn = std::function<Vector(double t, const Vector& x, const Vector& delayed)>;
using DiffusionFn = std::function<Matrix(double t, const Vector& x, const Vector& delayed)>;
using InterventionFn = std::function<Vector(const Vector& x, const Vector& u)>;
using RunningRewardFn = std::function<double(double t, const Vector& x)>;
using ImpulseCostFn = std::function<double(const Vector& x, const Vector& u, double t)>;
using TerminalRewardFn = std::function<double(const Vector& x)>;

/// Full description of one impulse control problem.
///
/// The payoff is maximized:
///   E[ sum f(t_k, X_k) dt + g(X_T) - sum_i cost(X_{tau_i-}, xi_i, tau_i) ].
/// Cost-minimization problems are encoded by negating f and g.
struct ProblemSpec {
  double horizon = 1.0;
  double delay = 0.0;
  int dim = 1;
  DriftFn drift;
  DiffusionFn diffusion;
  InterventionFn intervention;
  RunningRewardFn running_reward;
  ImpulseCostFn impulse_cost;
  TerminalRewardFn terminal_reward;
  ImpulseBox impulse_set;
  // Samples of the initial segment on [-delay, 0] at the step grid, oldest
  // first; the last entry is the value at time 0.
  std::vector<Vector> initial_segment;
  double cost_floor = 0.05;  // K6: lower bound on the impulse cost

  const Vector& initial_value() const { return initial_segment.back(); }

  /// Throws ValidationError on a malformed spec.
  void validate() const;
};

struct ImpulseEvent {
  double time = 0.0;
  Vector impulse;
};

/// Finite ordered sequence of (time, impulse) pairs with nondecreasing times.
class ImpulseControl {
 public:
  ImpulseControl() = default;
  explicit ImpulseControl(std::vector<ImpulseEvent> events);

  const std::vector<ImpulseEvent>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

  /// Throws if times decrease, leave [0, horizon], or impulses leave `box`.
  void validate(const ImpulseBox& box, double horizon) const;

 private:
  std::vector<ImpulseEvent> events_;
};

struct TrajectoryImpulse {
  std::size_t grid_index = 0;
  Vector pre;
  Vector impulse;
  Vector post;
};

/// Time-gridded controlled path. values[k] is the (post-impulse) state at
/// grid_times[k]; history holds the initial segment at negative grid indices
/// (oldest first).
struct Trajectory {
  double dt = 0.0;
  std::vector<double> grid_times;
  std::vector<Vector> values;
  std::vector<Vector> history;
  std::vector<TrajectoryImpulse> impulses;
};

/// Impulses scheduled at or after the horizon are inert: never applied or charged.
bool before_horizon(double time, double horizon);

/// Concatenates two controls: events of `first` before the horizon, then the
/// events of `second` with times floored at the last kept time of `first`.
ImpulseControl compose_controls(const ImpulseControl& first, const ImpulseControl& second,
                                double horizon);
/// As above, additionally rejecting impulses outside `box`.
ImpulseControl compose_controls(const ImpulseControl& first, const ImpulseControl& second,
                                double horizon, const ImpulseBox& box);

struct PayoffBreakdown {
  double running = 0.0;
  double terminal = 0.0;
  double impulse_cost = 0.0;
  double total() const { return running + terminal - impulse_cost; }
};

/// Left-endpoint quadrature of the running reward, plus terminal reward,
/// minus impulse costs. Throws if `traj` impulses do not match `control`.
PayoffBreakdown payoff_breakdown(const ProblemSpec& spec, const Trajectory& traj,
                                 const ImpulseControl& control);

double total_payoff(const ProblemSpec& spec, const Trajectory& traj, const ImpulseControl& control);

/// The control actually realized along a trajectory.
ImpulseControl realized_control(const Trajectory& traj);

}  // namespace impulse
