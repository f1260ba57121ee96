#include "impulse/value_function.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace impulse {

std::string to_string(Backend b) { return b == Backend::Grid ? "grid" : "regression"; }
std::string to_string(GridKind g) { return g == GridKind::Tensor ? "tensor" : "reachable"; }

TensorGrid::TensorGrid(int dim, double half_width, int points_per_axis)
    : dim_(dim), half_width_(half_width), points_(points_per_axis) {
  if (dim < 1 || dim > kMaxLags) throw ValidationError("grid dimension must be in [1, 64]");
  if (!(half_width > 0.0)) throw ValidationError("grid half width must be > 0");
  if (points_per_axis < 2) throw ValidationError("grid needs at least 2 points per axis");
  spacing_ = 2.0 * half_width / static_cast<double>(points_per_axis - 1);
  double count = 1.0;
  for (int a = 0; a < dim; ++a) count *= points_per_axis;
  if (count > 5e7) throw ValidationError("tensor grid is too large; use the regression backend");
  node_count_ = static_cast<std::size_t>(count);
}

double TensorGrid::coordinate(int i) const {
  const double span = static_cast<double>(points_ - 1);
  if (2 * i < points_ - 1) return -half_width_ + 2.0 * half_width_ * static_cast<double>(i) / span;
  if (2 * i > points_ - 1) {
    return half_width_ - 2.0 * half_width_ * static_cast<double>(points_ - 1 - i) / span;
  }
  return 0.0;
}

AugmentedState TensorGrid::node(std::size_t index) const {
  LagVector lags(dim_);
  for (int a = 0; a < dim_; ++a) {
    lags[a] = coordinate(static_cast<int>(index % static_cast<std::size_t>(points_)));
    index /= static_cast<std::size_t>(points_);
  }
  return AugmentedState(std::move(lags));
}

double TensorGrid::interpolate(const std::vector<double>& values, const AugmentedState& state) const {
  if (state.dim() != dim_) throw ValidationError("state dimension does not match the grid");
  int cell[kMaxLags];
  double frac[kMaxLags];
  for (int a = 0; a < dim_; ++a) {
    const double x = std::clamp(state.lags[a], -half_width_, half_width_);
    const double s = (x + half_width_) / spacing_;
    const double r = std::round(s);
    double i, f;
    if (std::abs(s - r) < 1e-9) {
      i = r;  // on a node
      f = 0.0;
    } else {
      i = std::floor(s);
      f = s - i;
    }
    if (i >= points_ - 1) {
      i = points_ - 2;
      f = 1.0;
    }
    cell[a] = static_cast<int>(i);
    frac[a] = f;
  }
  // Skip axes sitting exactly on a node to keep corner counts small.
  int active[kMaxLags];
  int n_active = 0;
  std::size_t base = 0, stride = 1;
  std::size_t strides[kMaxLags];
  for (int a = 0; a < dim_; ++a) {
    strides[a] = stride;
    if (frac[a] == 0.0) {
      base += static_cast<std::size_t>(cell[a]) * stride;
    } else if (frac[a] == 1.0) {
      base += static_cast<std::size_t>(cell[a] + 1) * stride;
    } else {
      base += static_cast<std::size_t>(cell[a]) * stride;
      active[n_active++] = a;
    }
    stride *= static_cast<std::size_t>(points_);
  }
  double out = 0.0;
  const std::size_t corners = std::size_t{1} << n_active;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t idx = base;
    for (int j = 0; j < n_active; ++j) {
      const int a = active[j];
      if (c & (std::size_t{1} << j)) {
        w *= frac[a];
        idx += strides[a];
      } else {
        w *= 1.0 - frac[a];
      }
    }
    out += w * values[idx];
  }
  return out;
}

void ReachableSets::add_step(std::vector<AugmentedState> support, std::size_t arrivals) {
  Step s;
  s.arrivals = arrivals;
  s.support = std::move(support);
  s.index.reserve(s.support.size());
  for (std::size_t i = 0; i < s.support.size(); ++i) s.index.emplace(key(s.support[i]), i);
  steps_.push_back(std::move(s));
}

std::size_t ReachableSets::total_points() const {
  std::size_t n = 0;
  for (const auto& s : steps_) n += s.support.size();
  return n;
}

std::size_t ReachableSets::find(std::size_t k, const AugmentedState& state) const {
  const auto& s = steps_.at(k);
  const auto it = s.index.find(key(state));
  if (it == s.index.end()) {
    throw RuntimeFailure("state is not in the reachable set of step " + std::to_string(k));
  }
  return it->second;
}

std::string ReachableSets::key(const AugmentedState& state) {
  std::string out(static_cast<std::size_t>(state.dim()) * sizeof(double), '\0');
  for (int j = 0; j < state.dim(); ++j) {
    const double v = state.lags[j] + 0.0;  // folds -0.0 into +0.0
    std::memcpy(out.data() + static_cast<std::size_t>(j) * sizeof(double), &v, sizeof(double));
  }
  return out;
}

double ValueFunction::evaluate(const std::vector<double>& data, std::size_t step,
                               const AugmentedState& state, bool value_slice) const {
  if (backend == Backend::Regression) {
    const Eigen::Map<const Eigen::VectorXd> c(data.data(), static_cast<Eigen::Index>(data.size()));
    return basis->evaluate(c, state);
  }
  if (grid_kind == GridKind::Tensor) return tensor->interpolate(data, state);
  const std::size_t i = reachable->find(step, state);
  if (value_slice && i >= reachable->step(step).arrivals) {
    throw RuntimeFailure("value requested at a non-arrival state of step " + std::to_string(step));
  }
  return data[i];
}

double ValueFunction::value(std::size_t step, const AugmentedState& state) const {
  if (step == n_steps) return terminal(state);
  return evaluate(values.at(step), step, state, true);
}

double ValueFunction::continuation_value(std::size_t step, const AugmentedState& state) const {
  if (step >= n_steps) throw ValidationError("no continuation value at the horizon");
  return evaluate(continuation.at(step), step, state, false);
}

const std::vector<double>& ValueFunction::stored_values(std::size_t step) const {
  return backend == Backend::Regression ? sample_values.at(step) : values.at(step);
}

void ValueFunction::check_compatible(const ValueFunction& other) const {
  if (backend != other.backend || n_steps != other.n_steps || dim != other.dim ||
      dt != other.dt || (backend == Backend::Grid && grid_kind != other.grid_kind)) {
    throw ValidationError("value functions use different representations or time grids");
  }
  if (tensor != other.tensor || reachable != other.reachable || basis != other.basis) {
    const bool same_tensor = tensor && other.tensor && tensor->dim() == other.tensor->dim() &&
                             tensor->half_width() == other.tensor->half_width() &&
                             tensor->points_per_axis() == other.tensor->points_per_axis();
    const bool same_basis = basis && other.basis && basis->dim() == other.basis->dim() &&
                            basis->degree() == other.basis->degree();
    if (!same_tensor && !same_basis) {
      throw ValidationError("value functions use different grids or bases");
    }
  }
}

}  // namespace impulse
