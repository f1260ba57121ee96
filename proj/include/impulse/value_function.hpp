#pragma once

#include "impulse/lattice.hpp"
#include "impulse/regression.hpp"

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace impulse {

enum class Backend { Grid, Regression };
enum class GridKind { Tensor, Reachable };

std::string to_string(Backend b);
std::string to_string(GridKind g);

/// Uniform tensor grid on [-half_width, half_width]^dim with multilinear
/// interpolation; queries outside the box are clamped to its boundary.
/// Node index = sum_a i_a * points^a (axis 0 fastest).
class TensorGrid {
 public:
  TensorGrid(int dim, double half_width, int points_per_axis);

  int dim() const { return dim_; }
  double half_width() const { return half_width_; }
  int points_per_axis() const { return points_; }
  std::size_t node_count() const { return node_count_; }

  double coordinate(int i) const;
  AugmentedState node(std::size_t index) const;
  double interpolate(const std::vector<double>& values, const AugmentedState& state) const;

 private:
  int dim_;
  double half_width_;
  int points_;
  double spacing_;
  std::size_t node_count_;
};

/// Exact finite state sets reachable from the initial state on a quadrature
/// lattice. At each step the support lists arrival states first, then their
/// impulse images; lookups require bit-exact membership.
class ReachableSets {
 public:
  struct Step {
    std::vector<AugmentedState> support;
    std::size_t arrivals = 0;
    std::unordered_map<std::string, std::size_t> index;
  };

  ReachableSets() = default;
  void add_step(std::vector<AugmentedState> support, std::size_t arrivals);

  std::size_t steps() const { return steps_.size(); }
  const Step& step(std::size_t k) const { return steps_[k]; }
  std::size_t total_points() const;
  /// Index into step(k).support; throws RuntimeFailure if absent.
  std::size_t find(std::size_t k, const AugmentedState& state) const;

  static std::string key(const AugmentedState& state);

 private:
  std::vector<Step> steps_;
};

/// One k-iterate: per time step the value V^k(t_k, .) and the continuation
/// value C^k(t_k, .) = f dt + E[V^k(t_{k+1}, next state)]. The terminal slice
/// is the terminal reward itself.
struct ValueFunction {
  Backend backend = Backend::Grid;
  GridKind grid_kind = GridKind::Tensor;
  std::size_t k = 0;
  double dt = 0.0;
  std::size_t n_steps = 0;
  int dim = 1;

  std::shared_ptr<const TensorGrid> tensor;
  std::shared_ptr<const ReachableSets> reachable;
  std::shared_ptr<const PolynomialBasis> basis;

  // Per step 0 .. n_steps-1: node values (tensor), point values (reachable:
  // values over arrivals, continuation over the full support), or basis
  // coefficients (regression).
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> continuation;
  // Regression only: V at the training samples of each step.
  std::vector<std::vector<double>> sample_values;

  std::function<double(const AugmentedState&)> terminal;

  double value(std::size_t step, const AugmentedState& state) const;
  double continuation_value(std::size_t step, const AugmentedState& state) const;

  /// V at the stored points of `step` (grid nodes, arrivals, or samples).
  const std::vector<double>& stored_values(std::size_t step) const;

  /// Throws ValidationError unless both share representation and time grid.
  void check_compatible(const ValueFunction& other) const;

 private:
  double evaluate(const std::vector<double>& data, std::size_t step, const AugmentedState& state,
                  bool value_slice) const;
};

}  // namespace impulse
