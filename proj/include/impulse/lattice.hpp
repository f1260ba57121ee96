#pragma once

#include "impulse/core.hpp"

#include <cstddef>
#include <vector>

namespace impulse {

inline constexpr int kMaxLags = 64;
using LagVector = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxLags, 1>;

/// Markov lift of a scalar delay system: lags[0] is the current value and
/// lags[j] the value j steps in the past, j = 0 .. delay_steps.
struct AugmentedState {
  LagVector lags;

  AugmentedState() = default;
  explicit AugmentedState(LagVector l) : lags(std::move(l)) {}
  static AugmentedState constant(int dim, double value);

  int dim() const { return static_cast<int>(lags.size()); }
  double head() const { return lags[0]; }
  double delayed() const { return lags[lags.size() - 1]; }
  bool operator==(const AugmentedState& other) const { return lags == other.lags; }
};

/// Lifted dimension delay_steps + 1.
inline int lifted_dimension(std::size_t delay_steps) { return static_cast<int>(delay_steps) + 1; }

/// Discrete law standing in for a N(0, dt) Brownian increment.
struct NoiseQuadrature {
  struct Node {
    double increment;
    double weight;
  };
  std::vector<Node> nodes;

  /// Gauss-Hermite rule with `n` nodes, rescaled to variance dt.
  static NoiseQuadrature gauss_hermite(int n, double dt);
  /// Throws unless weights are positive, sum to 1, and mean/variance match dt.
  void check_moments(double dt) const;
};

/// (X_k, X_{k-1}, ..., X_{k-delay_steps}) read from a scalar trajectory;
/// negative indices come from the trajectory's initial-segment history.
AugmentedState augment_history(const Trajectory& traj, std::size_t grid_index,
                               std::size_t delay_steps);

/// One Euler step of the lifted chain driven by increment z.
AugmentedState step_transition(const AugmentedState& state, double t, double z,
                               const ProblemSpec& spec, double dt);

/// Applies an impulse to the current value only; history is untouched.
AugmentedState impulse_transition(const AugmentedState& state, const Vector& u,
                                  const ProblemSpec& spec);

/// Uniform tensor grid with `points_per_axis` points on each axis of U,
/// first coordinate slowest.
std::vector<Vector> impulse_grid(const ImpulseBox& box, int points_per_axis);

}  // namespace impulse
