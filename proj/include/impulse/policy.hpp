#pragma once

#include "impulse/simulate.hpp"
#include "impulse/solver.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace impulse {

struct Decision {
  bool intervene = false;
  std::size_t index = 0;  // impulse grid index of u* (meaningful when intervening)
  Vector impulse;
  double continuation = 0.0;
  double intervention = 0.0;
};

/// Intervention rule induced by value iterates.
///
/// Stationary: one pair (V^k, V^{k-1}) decides at every state regardless of
/// how many impulses were used. Budgeted: with r = k - used impulses left the
/// pair (V^r, V^{r-1}) decides, and r = 0 forces CONTINUE; this is the optimal
/// rule of the at-most-k-impulses problem.
/// INTERVENE iff max_u C^{prev}(Gamma(x, u)) - cost > C(x); ties continue.
class Policy final : public DecisionRule {
 public:
  enum class Mode { Stationary, Budgeted };

  Policy(std::vector<ValueFunction> iterates, ProblemSpec spec, std::vector<Vector> u_grid,
         Mode mode);

  Mode mode() const { return mode_; }
  std::size_t k() const { return iterates_.size() - 1; }
  std::size_t n_steps() const { return iterates_.front().n_steps; }
  int state_dim() const { return iterates_.front().dim; }
  const std::vector<Vector>& impulse_grid() const { return u_grid_; }

  Decision decide_detail(std::size_t step, const AugmentedState& state,
                         std::size_t impulses_used) const;
  std::optional<Vector> decide(std::size_t step, const AugmentedState& state,
                               std::size_t impulses_used) const override;

 private:
  std::vector<ValueFunction> iterates_;  // stationary: {V^{k-1}, V^k}
  ProblemSpec spec_;
  std::vector<Vector> u_grid_;
  Mode mode_;
};

/// Stationary policy from the pair (V^k, V^{k-1}).
Policy extract_policy(const ValueFunction& v_k, const ValueFunction& v_prev,
                      const ProblemSpec& spec, const std::vector<Vector>& u_grid);

/// Budgeted policy for at most k impulses from iterates V^0 .. V^k.
Policy extract_budgeted_policy(const std::vector<ValueFunction>& iterates, std::size_t k,
                               const ProblemSpec& spec, const std::vector<Vector>& u_grid);

/// No-intervention region boundaries on the constant-history slice at one time.
/// lower/upper are the intervening mesh points nearest to 0 from below/above;
/// NaN when no point on that side intervenes.
struct ThresholdRow {
  double t = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

std::vector<ThresholdRow> intervention_thresholds(const Policy& policy, double dt,
                                                  const std::vector<double>& x_mesh);

/// True when no mesh point of the slice intervenes at any time step.
bool intervention_region_empty(const std::vector<ThresholdRow>& rows);

/// Every impulse costs at least K6, so along each path
///   count * K6 <= V^k(0, x0) - V^0(0, x0) + range,
/// range = max path reward - min path payoff over the sample.
struct ImpulseCountCheck {
  double bound = 0.0;  // right-hand side divided by K6
  std::size_t max_count = 0;
  double mean_count = 0.0;
  bool satisfied = true;
};

ImpulseCountCheck check_impulse_count_bound(const std::vector<PathRecord>& records, double v_k,
                                            double v_0, double cost_floor);

}  // namespace impulse
