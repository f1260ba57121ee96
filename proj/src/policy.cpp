#include "impulse/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace impulse {

Policy::Policy(std::vector<ValueFunction> iterates, ProblemSpec spec, std::vector<Vector> u_grid,
               Mode mode)
    : iterates_(std::move(iterates)), spec_(std::move(spec)), u_grid_(std::move(u_grid)),
      mode_(mode) {
  if (iterates_.size() < 2) throw ValidationError("a policy needs at least two value iterates");
  if (u_grid_.empty()) throw ValidationError("impulse grid is empty");
  for (std::size_t i = 1; i < iterates_.size(); ++i) iterates_[i].check_compatible(iterates_[0]);
  for (const auto& u : u_grid_) {
    if (!spec_.impulse_set.contains(u)) throw ValidationError("impulse grid point outside U");
  }
}

Decision Policy::decide_detail(std::size_t step, const AugmentedState& state,
                               std::size_t impulses_used) const {
  Decision d;
  const std::size_t k = this->k();
  std::size_t b = k;
  if (mode_ == Mode::Budgeted) {
    if (impulses_used >= k) b = 0;
    else b = k - impulses_used;
  }
  if (step >= n_steps() || b == 0) {
    d.continuation = step < n_steps() ? iterates_[0].continuation_value(step, state)
                                      : iterates_[0].value(step, state);
    d.intervention = -std::numeric_limits<double>::infinity();
    return d;
  }
  const ValueFunction& cur = iterates_[b];
  const ValueFunction& prev = iterates_[b - 1];
  d.continuation = cur.continuation_value(step, state);
  const auto choice = intervention_value(prev, step, state, spec_, u_grid_);
  d.intervention = choice.value;
  d.index = choice.index;
  d.impulse = choice.impulse;
  d.intervene = choice.value > d.continuation;
  return d;
}

std::optional<Vector> Policy::decide(std::size_t step, const AugmentedState& state,
                                     std::size_t impulses_used) const {
  const auto d = decide_detail(step, state, impulses_used);
  if (!d.intervene) return std::nullopt;
  return d.impulse;
}

Policy extract_policy(const ValueFunction& v_k, const ValueFunction& v_prev,
                      const ProblemSpec& spec, const std::vector<Vector>& u_grid) {
  v_k.check_compatible(v_prev);
  return Policy({v_prev, v_k}, spec, u_grid, Policy::Mode::Stationary);
}

Policy extract_budgeted_policy(const std::vector<ValueFunction>& iterates, std::size_t k,
                               const ProblemSpec& spec, const std::vector<Vector>& u_grid) {
  if (k < 1 || k >= iterates.size()) {
    throw ValidationError("budgeted policy needs 1 <= k < number of iterates");
  }
  return Policy({iterates.begin(), iterates.begin() + static_cast<std::ptrdiff_t>(k + 1)}, spec,
                u_grid, Policy::Mode::Budgeted);
}

std::vector<ThresholdRow> intervention_thresholds(const Policy& policy, double dt,
                                                  const std::vector<double>& x_mesh) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<ThresholdRow> rows;
  rows.reserve(policy.n_steps());
  for (std::size_t step = 0; step < policy.n_steps(); ++step) {
    ThresholdRow row{static_cast<double>(step) * dt, nan, nan};
    for (const double x : x_mesh) {
      const auto d = policy.decide_detail(step, AugmentedState::constant(policy.state_dim(), x), 0);
      if (!d.intervene) continue;
      if (x < 0.0 && (std::isnan(row.lower) || x > row.lower)) row.lower = x;
      if (x >= 0.0 && (std::isnan(row.upper) || x < row.upper)) row.upper = x;
    }
    rows.push_back(row);
  }
  return rows;
}

bool intervention_region_empty(const std::vector<ThresholdRow>& rows) {
  for (const auto& r : rows) {
    if (!std::isnan(r.lower) || !std::isnan(r.upper)) return false;
  }
  return true;
}

ImpulseCountCheck check_impulse_count_bound(const std::vector<PathRecord>& records, double v_k,
                                            double v_0, double cost_floor) {
  if (!(cost_floor > 0.0)) throw ValidationError("cost floor must be > 0");
  ImpulseCountCheck c;
  if (records.empty()) return c;
  double max_reward = -std::numeric_limits<double>::infinity();
  double min_payoff = std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (const auto& r : records) {
    max_reward = std::max(max_reward, r.reward);
    min_payoff = std::min(min_payoff, r.payoff);
    c.max_count = std::max(c.max_count, r.impulses);
    total += static_cast<double>(r.impulses);
  }
  c.mean_count = total / static_cast<double>(records.size());
  c.bound = (v_k - v_0 + (max_reward - min_payoff)) / cost_floor;
  for (const auto& r : records) {
    if (static_cast<double>(r.impulses) > c.bound) c.satisfied = false;
  }
  return c;
}

}  // namespace impulse
