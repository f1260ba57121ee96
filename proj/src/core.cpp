#include "impulse/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace impulse {

namespace {

bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace

bool ImpulseBox::contains(const Vector& u, double slack) const {
  if (u.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    if (!(u[i] >= lower[i] - slack && u[i] <= upper[i] + slack)) return false;
  }
  return true;
}

void ProblemSpec::validate() const {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("horizon must be > 0");
  if (!(delay >= 0.0) || !std::isfinite(delay)) throw ValidationError("delay must be >= 0");
  if (dim < 1 || dim > kMaxDim) throw ValidationError("state dimension must be in [1, 8]");
  if (!drift || !diffusion || !intervention || !running_reward || !impulse_cost ||
      !terminal_reward) {
    throw ValidationError("problem is missing a coefficient function");
  }
  const int m = impulse_set.dim();
  if (m < 1 || m > kMaxDim || impulse_set.upper.size() != m) {
    throw ValidationError("impulse set must be a box of dimension in [1, 8]");
  }
  for (int i = 0; i < m; ++i) {
    if (!std::isfinite(impulse_set.lower[i]) || !std::isfinite(impulse_set.upper[i]) ||
        impulse_set.lower[i] > impulse_set.upper[i]) {
      throw ValidationError("impulse set must be nonempty and bounded");
    }
  }
  if (initial_segment.empty()) throw ValidationError("initial segment has no samples");
  for (const auto& v : initial_segment) {
    if (v.size() != dim) throw ValidationError("initial segment sample has wrong dimension");
    if (!all_finite(v)) throw ValidationError("initial segment samples must be finite");
  }
  if (!(cost_floor > 0.0)) throw ValidationError("cost floor (K6) must be > 0");
}

ImpulseControl::ImpulseControl(std::vector<ImpulseEvent> events) : events_(std::move(events)) {
  for (std::size_t i = 1; i < events_.size(); ++i) {
    if (events_[i].time < events_[i - 1].time) {
      std::ostringstream msg;
      msg << "control times decrease at event " << i;
      throw ValidationError(msg.str());
    }
  }
}

void ImpulseControl::validate(const ImpulseBox& box, double horizon) const {
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const auto& e = events_[i];
    if (!(e.time >= 0.0 && e.time <= horizon)) {
      throw ValidationError("control event " + std::to_string(i) + " lies outside [0, T]");
    }
    if (!box.contains(e.impulse)) {
      throw ValidationError("control event " + std::to_string(i) + " has impulse outside U");
    }
  }
}

bool before_horizon(double time, double horizon) {
  return time < horizon - 1e-12 * std::max(1.0, horizon);
}

ImpulseControl compose_controls(const ImpulseControl& first, const ImpulseControl& second,
                                double horizon) {
  std::vector<ImpulseEvent> out;
  out.reserve(first.size() + second.size());
  double floor_time = 0.0;
  for (const auto& e : first.events()) {
    if (!before_horizon(e.time, horizon)) break;
    out.push_back(e);
    floor_time = e.time;
  }
  for (const auto& e : second.events()) {
    out.push_back({std::max(e.time, floor_time), e.impulse});
  }
  return ImpulseControl(std::move(out));
}

ImpulseControl compose_controls(const ImpulseControl& first, const ImpulseControl& second,
                                double horizon, const ImpulseBox& box) {
  first.validate(box, horizon);
  second.validate(box, horizon);
  return compose_controls(first, second, horizon);
}

PayoffBreakdown payoff_breakdown(const ProblemSpec& spec, const Trajectory& traj,
                                 const ImpulseControl& control) {
  if (traj.values.empty() || traj.values.size() != traj.grid_times.size()) {
    throw ValidationError("trajectory values and grid have different lengths");
  }
  std::size_t matched = 0;
  for (const auto& e : control.events()) {
    if (!before_horizon(e.time, spec.horizon)) continue;
    if (matched >= traj.impulses.size()) {
      throw ValidationError("control has more impulses than the trajectory records");
    }
    const auto& rec = traj.impulses[matched];
    const double t = traj.grid_times[rec.grid_index];
    if (std::abs(t - e.time) > 1e-9 * std::max(1.0, spec.horizon) || rec.impulse != e.impulse) {
      throw ValidationError("trajectory impulse " + std::to_string(matched) +
                            " does not match the control");
    }
    ++matched;
  }
  if (matched != traj.impulses.size()) {
    throw ValidationError("trajectory records impulses absent from the control");
  }

  PayoffBreakdown out;
  const std::size_t n = traj.values.size() - 1;
  for (std::size_t k = 0; k < n; ++k) {
    out.running += spec.running_reward(traj.grid_times[k], traj.values[k]) * traj.dt;
  }
  out.terminal = spec.terminal_reward(traj.values.back());
  for (const auto& rec : traj.impulses) {
    out.impulse_cost += spec.impulse_cost(rec.pre, rec.impulse, traj.grid_times[rec.grid_index]);
  }
  return out;
}

double total_payoff(const ProblemSpec& spec, const Trajectory& traj, const ImpulseControl& control) {
  return payoff_breakdown(spec, traj, control).total();
}

ImpulseControl realized_control(const Trajectory& traj) {
  std::vector<ImpulseEvent> events;
  events.reserve(traj.impulses.size());
  for (const auto& rec : traj.impulses) {
    events.push_back({traj.grid_times[rec.grid_index], rec.impulse});
  }
  return ImpulseControl(std::move(events));
}

}  // namespace impulse
