#pragma once

#include "impulse/simulate.hpp"
#include "impulse/value_function.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace impulse {

struct RegressionOptions {
  int degree = 2;
  double ridge = 1e-8;
  std::size_t samples = 4000;
  double exploration_rate = 0.1;
  std::uint64_t seed = 1;
};

struct SolverOptions {
  Backend backend = Backend::Grid;
  GridKind grid_kind = GridKind::Tensor;
  double half_width = 4.0;
  int points_per_axis = 41;
  int impulse_points = 41;
  int quadrature_nodes = 7;
  std::size_t k_max = 20;
  double tol = 1e-3;
  RegressionOptions regression;
  std::size_t max_reachable_points = 2'000'000;
};

struct InterventionChoice {
  double value = 0.0;
  std::size_t index = 0;  // position of the maximizer in the impulse grid
  Vector impulse;
};

/// max_u { prev_continuation(Gamma(state, u)) - cost(head, u, t) } over the
/// impulse grid; ties go to the smallest grid index.
InterventionChoice intervention_value(
    const std::function<double(const AugmentedState&)>& prev_continuation, double t,
    const AugmentedState& state, const ProblemSpec& spec, std::span<const Vector> u_grid);

/// Same, reading the continuation of the previous iterate at grid step `step`.
/// One impulse per grid time: the impulsed state continues under V^{k-1}.
InterventionChoice intervention_value(const ValueFunction& prev, std::size_t step,
                                      const AugmentedState& state, const ProblemSpec& spec,
                                      std::span<const Vector> u_grid);

struct SolveResult {
  std::vector<ValueFunction> iterates;  // k = 0 .. k_stop
  std::vector<double> gaps;             // gaps[k] = sup |V^k - V^{k-1}|, gaps[0] = NaN
  std::vector<double> initial_values;   // V^k(0, x0)
  std::size_t k_stop = 0;
  bool converged = false;
  std::vector<Vector> impulse_grid;
  AugmentedState initial_state;
};

/// Lifted initial state from the initial segment (lags[j] = X_{-j dt}).
AugmentedState initial_lifted_state(const ProblemSpec& spec, const TimeGrid& grid);

/// Backward k-intervention value iteration:
///   V^0 = expected running + terminal reward with no impulses;
///   V^k(t, x) = max(C^k(t, x), max_u C^{k-1}(t, Gamma(x, u)) - cost),
///   V^k(T, .) = g. Stops at the first k with sup gap < tol, or at k_max.
/// A caller-supplied quadrature overrides the Gauss-Hermite default.
SolveResult k_value_iteration(const ProblemSpec& spec, const TimeGrid& grid,
                              const SolverOptions& options,
                              std::optional<NoiseQuadrature> quadrature = std::nullopt);

/// Bellman value max(C^k, intervention) at an arbitrary state, computed from
/// the next-step slice of `current` and the continuation of `previous`.
double bellman_value_at(const ValueFunction& current, const ValueFunction* previous,
                        std::size_t step, const AugmentedState& state, const ProblemSpec& spec,
                        const NoiseQuadrature& quadrature, std::span<const Vector> u_grid);

}  // namespace impulse
