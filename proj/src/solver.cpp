#include "impulse/solver.hpp"

#include "impulse/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace impulse {

namespace {

constexpr double kValueBound = 1e12;

Vector scalar(double v) {
  Vector out(1);
  out[0] = v;
  return out;
}

std::string describe(const AugmentedState& s) {
  std::ostringstream out;
  out << '(';
  for (int j = 0; j < s.dim(); ++j) out << (j ? ", " : "") << s.lags[j];
  out << ')';
  return out.str();
}

// Points at which each time slice is computed: C over all points of a step,
// V over the first value_count(step) of them.
class Layout {
 public:
  virtual ~Layout() = default;
  virtual const std::vector<AugmentedState>& points(std::size_t step) const = 0;
  virtual std::size_t value_count(std::size_t step) const { return points(step).size(); }
};

class TensorLayout final : public Layout {
 public:
  explicit TensorLayout(const TensorGrid& grid) {
    nodes_.reserve(grid.node_count());
    for (std::size_t i = 0; i < grid.node_count(); ++i) nodes_.push_back(grid.node(i));
  }
  const std::vector<AugmentedState>& points(std::size_t) const override { return nodes_; }

 private:
  std::vector<AugmentedState> nodes_;
};

class ReachableLayout final : public Layout {
 public:
  explicit ReachableLayout(std::shared_ptr<const ReachableSets> sets) : sets_(std::move(sets)) {}
  const std::vector<AugmentedState>& points(std::size_t step) const override {
    return sets_->step(step).support;
  }
  std::size_t value_count(std::size_t step) const override { return sets_->step(step).arrivals; }

 private:
  std::shared_ptr<const ReachableSets> sets_;
};

class SampleLayout final : public Layout {
 public:
  explicit SampleLayout(std::vector<std::vector<AugmentedState>> samples)
      : samples_(std::move(samples)) {}
  const std::vector<AugmentedState>& points(std::size_t step) const override {
    return samples_[step];
  }

 private:
  std::vector<std::vector<AugmentedState>> samples_;
};

std::shared_ptr<ReachableSets> enumerate_reachable(const ProblemSpec& spec, const TimeGrid& grid,
                                                   const AugmentedState& x0,
                                                   const NoiseQuadrature& quad,
                                                   std::span<const Vector> u_grid,
                                                   std::size_t budget) {
  auto sets = std::make_shared<ReachableSets>();
  std::vector<AugmentedState> arrivals{x0};
  std::size_t total = 0;
  for (std::size_t step = 0; step < grid.n_steps; ++step) {
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<AugmentedState> support;
    auto add = [&](const AugmentedState& s, std::vector<AugmentedState>& into,
                   std::unordered_map<std::string, std::size_t>& index) {
      if (index.emplace(ReachableSets::key(s), into.size()).second) into.push_back(s);
    };
    for (const auto& a : arrivals) add(a, support, seen);
    const std::size_t n_arrivals = support.size();
    for (std::size_t i = 0; i < n_arrivals; ++i) {
      for (const auto& u : u_grid) add(impulse_transition(support[i], u, spec), support, seen);
    }
    total += support.size();
    if (total > budget) {
      throw ValidationError("reachable state set exceeds " + std::to_string(budget) +
                            " points; use the tensor grid or regression backend");
    }
    std::unordered_map<std::string, std::size_t> next_seen;
    std::vector<AugmentedState> next;
    const double t = grid.time(static_cast<std::ptrdiff_t>(step));
    for (const auto& s : support) {
      for (const auto& node : quad.nodes) {
        add(step_transition(s, t, node.increment, spec, grid.dt), next, next_seen);
      }
    }
    sets->add_step(std::move(support), n_arrivals);
    arrivals = std::move(next);
  }
  return sets;
}

std::vector<std::vector<AugmentedState>> exploration_samples(const ProblemSpec& spec,
                                                             const TimeGrid& grid,
                                                             const AugmentedState& x0,
                                                             std::span<const Vector> u_grid,
                                                             const RegressionOptions& opts) {
  const CounterRng rng(opts.seed, kExplorationStream);
  const double sqrt_dt = std::sqrt(grid.dt);
  std::vector<std::vector<AugmentedState>> samples(grid.n_steps);
  for (auto& s : samples) s.reserve(opts.samples);
  for (std::size_t i = 0; i < opts.samples; ++i) {
    AugmentedState state = x0;
    for (std::size_t step = 0; step < grid.n_steps; ++step) {
      if (rng.uniform(i, step, 0) < opts.exploration_rate) {
        const auto pick = std::min(u_grid.size() - 1,
                                   static_cast<std::size_t>(rng.uniform(i, step, 1) *
                                                            static_cast<double>(u_grid.size())));
        samples[step].push_back(impulse_transition(state, u_grid[pick], spec));
      } else {
        samples[step].push_back(state);
      }
      const double z = sqrt_dt * rng.normal(i, step, 1);
      state = step_transition(state, grid.time(static_cast<std::ptrdiff_t>(step)), z, spec, grid.dt);
    }
  }
  return samples;
}

double continuation_at(const ValueFunction& current, std::size_t step, const AugmentedState& state,
                       const ProblemSpec& spec, const NoiseQuadrature& quad, double dt) {
  const double t = static_cast<double>(step) * dt;
  double expected = 0.0;
  for (const auto& node : quad.nodes) {
    expected += node.weight * current.value(step + 1, step_transition(state, t, node.increment, spec, dt));
  }
  return spec.running_reward(t, scalar(state.head())) * dt + expected;
}

}  // namespace

InterventionChoice intervention_value(
    const std::function<double(const AugmentedState&)>& prev_continuation, double t,
    const AugmentedState& state, const ProblemSpec& spec, std::span<const Vector> u_grid) {
  if (u_grid.empty()) throw ValidationError("impulse grid is empty");
  InterventionChoice best;
  best.value = -std::numeric_limits<double>::infinity();
  const Vector head = scalar(state.head());
  for (std::size_t i = 0; i < u_grid.size(); ++i) {
    const double v = prev_continuation(impulse_transition(state, u_grid[i], spec)) -
                     spec.impulse_cost(head, u_grid[i], t);
    if (v > best.value) {
      best.value = v;
      best.index = i;
    }
  }
  best.impulse = u_grid[best.index];
  return best;
}

InterventionChoice intervention_value(const ValueFunction& prev, std::size_t step,
                                      const AugmentedState& state, const ProblemSpec& spec,
                                      std::span<const Vector> u_grid) {
  return intervention_value(
      [&](const AugmentedState& s) { return prev.continuation_value(step, s); },
      static_cast<double>(step) * prev.dt, state, spec, u_grid);
}

double bellman_value_at(const ValueFunction& current, const ValueFunction* previous,
                        std::size_t step, const AugmentedState& state, const ProblemSpec& spec,
                        const NoiseQuadrature& quadrature, std::span<const Vector> u_grid) {
  if (step == current.n_steps) return current.value(step, state);
  const double c = continuation_at(current, step, state, spec, quadrature, current.dt);
  if (!previous) return c;
  const auto choice = intervention_value(*previous, step, state, spec, u_grid);
  return choice.value > c ? choice.value : c;
}

AugmentedState initial_lifted_state(const ProblemSpec& spec, const TimeGrid& grid) {
  if (spec.dim != 1) throw ValidationError("the lifted state supports scalar problems only");
  if (spec.initial_segment.size() != grid.delay_steps + 1) {
    throw ValidationError("initial segment needs delay_steps + 1 samples");
  }
  const int m = lifted_dimension(grid.delay_steps);
  if (m > kMaxLags) throw ValidationError("lifted dimension must be at most 64");
  LagVector lags(m);
  for (int j = 0; j < m; ++j) lags[j] = spec.initial_segment[static_cast<std::size_t>(m - 1 - j)][0];
  return AugmentedState(std::move(lags));
}

SolveResult k_value_iteration(const ProblemSpec& spec, const TimeGrid& grid,
                              const SolverOptions& options,
                              std::optional<NoiseQuadrature> quadrature) {
  spec.validate();
  if (options.k_max < 1) throw ValidationError("k_max must be >= 1");
  if (!(options.tol > 0.0)) throw ValidationError("tol must be > 0");
  const NoiseQuadrature quad =
      quadrature ? *quadrature : NoiseQuadrature::gauss_hermite(options.quadrature_nodes, grid.dt);
  quad.check_moments(grid.dt);

  SolveResult result;
  result.initial_state = initial_lifted_state(spec, grid);
  result.impulse_grid = impulse_grid(spec.impulse_set, options.impulse_points);
  const auto& u_grid = result.impulse_grid;
  const int m = result.initial_state.dim();
  const std::size_t n = grid.n_steps;

  ValueFunction proto;
  proto.backend = options.backend;
  proto.grid_kind = options.grid_kind;
  proto.dt = grid.dt;
  proto.n_steps = n;
  proto.dim = m;
  const auto g = spec.terminal_reward;
  proto.terminal = [g](const AugmentedState& s) { return g(scalar(s.head())); };

  std::unique_ptr<Layout> layout;
  if (options.backend == Backend::Grid && options.grid_kind == GridKind::Tensor) {
    proto.tensor = std::make_shared<TensorGrid>(m, options.half_width, options.points_per_axis);
    layout = std::make_unique<TensorLayout>(*proto.tensor);
  } else if (options.backend == Backend::Grid) {
    proto.reachable = enumerate_reachable(spec, grid, result.initial_state, quad, u_grid,
                                          options.max_reachable_points);
    layout = std::make_unique<ReachableLayout>(proto.reachable);
  } else {
    proto.basis = std::make_shared<PolynomialBasis>(m, options.regression.degree);
    if (options.regression.samples < proto.basis->size()) {
      throw ValidationError("regression needs at least as many samples as basis functions (" +
                            std::to_string(proto.basis->size()) + ")");
    }
    layout = std::make_unique<SampleLayout>(
        exploration_samples(spec, grid, result.initial_state, u_grid, options.regression));
  }

  auto run_iteration = [&](std::size_t k, const ValueFunction* prev) {
    ValueFunction vf = proto;
    vf.k = k;
    vf.values.resize(n);
    vf.continuation.resize(n);
    if (options.backend == Backend::Regression) vf.sample_values.resize(n);
    for (std::size_t step = n; step-- > 0;) {
      const auto& pts = layout->points(step);
      const std::size_t nv = layout->value_count(step);
      std::vector<double> cont(pts.size());
      std::vector<double> val(nv);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        cont[i] = continuation_at(vf, step, pts[i], spec, quad, grid.dt);
      }
      for (std::size_t j = 0; j < nv; ++j) {
        val[j] = cont[j];
        if (prev) {
          const auto choice = intervention_value(*prev, step, pts[j], spec, u_grid);
          if (choice.value > val[j]) val[j] = choice.value;
        }
        if (!std::isfinite(val[j]) || std::abs(val[j]) > kValueBound) {
          throw RuntimeFailure("value iteration diverged at k=" + std::to_string(k) + ", step=" +
                               std::to_string(step) + ", state " + describe(pts[j]) +
                               "; the grid or basis is under-resolved");
        }
      }
      if (options.backend == Backend::Regression) {
        const auto c_coef = fit_regression_step(pts, cont, *vf.basis, options.regression.ridge);
        const auto v_coef = fit_regression_step(pts, val, *vf.basis, options.regression.ridge);
        vf.continuation[step].assign(c_coef.data(), c_coef.data() + c_coef.size());
        vf.values[step].assign(v_coef.data(), v_coef.data() + v_coef.size());
        vf.sample_values[step] = std::move(val);
      } else {
        vf.continuation[step] = std::move(cont);
        vf.values[step] = std::move(val);
      }
    }
    return vf;
  };

  auto gap_between = [&](const ValueFunction& a, const ValueFunction& b) {
    double gap = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
      const auto& va = a.stored_values(step);
      const auto& vb = b.stored_values(step);
      for (std::size_t j = 0; j < va.size(); ++j) gap = std::max(gap, std::abs(va[j] - vb[j]));
    }
    return gap;
  };

  result.iterates.push_back(run_iteration(0, nullptr));
  result.gaps.push_back(std::numeric_limits<double>::quiet_NaN());
  result.initial_values.push_back(bellman_value_at(result.iterates[0], nullptr, 0,
                                                   result.initial_state, spec, quad, u_grid));
  for (std::size_t k = 1; k <= options.k_max; ++k) {
    result.iterates.push_back(run_iteration(k, &result.iterates[k - 1]));
    const auto& cur = result.iterates[k];
    const auto& prev = result.iterates[k - 1];
    result.gaps.push_back(gap_between(cur, prev));
    result.initial_values.push_back(
        bellman_value_at(cur, &prev, 0, result.initial_state, spec, quad, u_grid));
    result.k_stop = k;
    if (result.gaps.back() < options.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace impulse
