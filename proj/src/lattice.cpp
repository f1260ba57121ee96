#include "impulse/lattice.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace impulse {

namespace {

Vector scalar(double v) {
  Vector out(1);
  out[0] = v;
  return out;
}

void require_scalar(const ProblemSpec& spec) {
  if (spec.dim != 1) throw ValidationError("the lifted state supports scalar problems only");
}

}  // namespace

AugmentedState AugmentedState::constant(int dim, double value) {
  if (dim < 1 || dim > kMaxLags) throw ValidationError("lifted dimension must be in [1, 64]");
  return AugmentedState(LagVector::Constant(dim, value));
}

NoiseQuadrature NoiseQuadrature::gauss_hermite(int n, double dt) {
  if (n < 2) throw ValidationError("quadrature needs at least two nodes to carry variance dt");
  if (!(dt > 0.0)) throw ValidationError("quadrature needs dt > 0");
  // Closed forms for the smallest rules keep their nodes bit-reproducible.
  if (n == 2) {
    const double z = std::sqrt(dt);
    return NoiseQuadrature{{{-z, 0.5}, {z, 0.5}}};
  }
  if (n == 3) {
    const double z = std::sqrt(3.0 * dt);
    return NoiseQuadrature{{{-z, 1.0 / 6.0}, {0.0, 2.0 / 3.0}, {z, 1.0 / 6.0}}};
  }
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    jacobi(i, i - 1) = jacobi(i - 1, i) = std::sqrt(static_cast<double>(i));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  const Eigen::VectorXd x = eig.eigenvalues();
  Eigen::VectorXd w = eig.eigenvectors().row(0).transpose().array().square();
  w /= w.sum();

  NoiseQuadrature q;
  q.nodes.resize(static_cast<std::size_t>(n));
  const double scale = std::sqrt(dt);
  for (int i = 0; i < n; ++i) {
    const int j = n - 1 - i;
    // Enforce the exact symmetry of the rule.
    const double node = 0.5 * (x[i] - x[j]);
    const double weight = 0.5 * (w[i] + w[j]);
    q.nodes[static_cast<std::size_t>(i)] = {i == j ? 0.0 : node * scale, weight};
  }
  return q;
}

void NoiseQuadrature::check_moments(double dt) const {
  double total = 0.0, mean = 0.0, second = 0.0;
  for (const auto& node : nodes) {
    if (!(node.weight > 0.0)) throw ValidationError("quadrature weights must be positive");
    total += node.weight;
    mean += node.weight * node.increment;
    second += node.weight * node.increment * node.increment;
  }
  if (std::abs(total - 1.0) > 1e-12) throw ValidationError("quadrature weights must sum to 1");
  if (std::abs(mean) > 1e-10) throw ValidationError("quadrature mean must be 0");
  if (std::abs(second - dt) > 1e-10) throw ValidationError("quadrature variance must equal dt");
}

AugmentedState augment_history(const Trajectory& traj, std::size_t grid_index,
                               std::size_t delay_steps) {
  if (grid_index >= traj.values.size()) throw ValidationError("grid index beyond trajectory");
  if (delay_steps > grid_index + traj.history.size()) {
    throw ValidationError("insufficient history for " + std::to_string(delay_steps) +
                          " lags at grid index " + std::to_string(grid_index));
  }
  const int m = lifted_dimension(delay_steps);
  if (m > kMaxLags) throw ValidationError("lifted dimension must be at most 64");
  LagVector lags(m);
  for (int j = 0; j < m; ++j) {
    const auto back = static_cast<std::ptrdiff_t>(grid_index) - j;
    const Vector& v = back >= 0 ? traj.values[static_cast<std::size_t>(back)]
                                : traj.history[traj.history.size() + static_cast<std::size_t>(back)];
    if (v.size() != 1) throw ValidationError("the lifted state supports scalar trajectories only");
    lags[j] = v[0];
  }
  return AugmentedState(std::move(lags));
}

AugmentedState step_transition(const AugmentedState& state, double t, double z,
                               const ProblemSpec& spec, double dt) {
  require_scalar(spec);
  const int m = state.dim();
  const Vector x = scalar(state.head());
  const Vector y = scalar(state.delayed());
  const double next = state.head() + spec.drift(t, x, y)[0] * dt + spec.diffusion(t, x, y)(0, 0) * z;
  if (!std::isfinite(next)) throw RuntimeFailure("lifted step produced a non-finite value");
  AugmentedState out;
  out.lags.resize(m);
  out.lags[0] = next;
  for (int j = 1; j < m; ++j) out.lags[j] = state.lags[j - 1];
  return out;
}

AugmentedState impulse_transition(const AugmentedState& state, const Vector& u,
                                  const ProblemSpec& spec) {
  require_scalar(spec);
  if (!spec.impulse_set.contains(u)) throw ValidationError("impulse lies outside U");
  AugmentedState out = state;
  out.lags[0] = spec.intervention(scalar(state.head()), u)[0];
  return out;
}

std::vector<Vector> impulse_grid(const ImpulseBox& box, int points_per_axis) {
  if (points_per_axis < 1) throw ValidationError("impulse grid needs at least one point per axis");
  const int m = box.dim();
  std::size_t total = 1;
  for (int i = 0; i < m; ++i) total *= static_cast<std::size_t>(points_per_axis);
  std::vector<Vector> out;
  out.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(m), 0);
  for (std::size_t n = 0; n < total; ++n) {
    Vector u(m);
    for (int i = 0; i < m; ++i) {
      const double lo = box.lower[i], hi = box.upper[i];
      const int k = idx[static_cast<std::size_t>(i)];
      const double span = static_cast<double>(points_per_axis - 1);
      // Measured from the nearer endpoint so symmetric boxes give symmetric grids.
      if (points_per_axis == 1) {
        u[i] = 0.5 * (lo + hi);
      } else if (2 * k < points_per_axis - 1) {
        u[i] = lo + (hi - lo) * static_cast<double>(k) / span;
      } else if (2 * k > points_per_axis - 1) {
        u[i] = hi - (hi - lo) * static_cast<double>(points_per_axis - 1 - k) / span;
      } else {
        u[i] = 0.5 * (lo + hi);
      }
    }
    out.push_back(u);
    for (int i = m - 1; i >= 0; --i) {
      if (++idx[static_cast<std::size_t>(i)] < points_per_axis) break;
      idx[static_cast<std::size_t>(i)] = 0;
    }
  }
  return out;
}

}  // namespace impulse
