#include "impulse/regression.hpp"

#include <cmath>
#include <functional>

namespace impulse {

PolynomialBasis::PolynomialBasis(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > kMaxLags) throw ValidationError("basis dimension must be in [1, 64]");
  if (degree < 0) throw ValidationError("basis degree must be >= 0");
  std::vector<int> e(static_cast<std::size_t>(dim), 0);
  // All exponent vectors with sum == total, for total = 0 .. degree.
  std::function<void(int, int)> rec = [&](int axis, int remaining) {
    if (axis == dim - 1) {
      e[static_cast<std::size_t>(axis)] = remaining;
      exponents_.push_back(e);
      return;
    }
    for (int p = remaining; p >= 0; --p) {
      e[static_cast<std::size_t>(axis)] = p;
      rec(axis + 1, remaining - p);
    }
  };
  for (int total = 0; total <= degree; ++total) rec(0, total);
}

void PolynomialBasis::features(const AugmentedState& state, std::span<double> out) const {
  if (state.dim() != dim_) throw ValidationError("state dimension does not match the basis");
  // powers[a * (degree+1) + p] = x_a^p
  double powers[kMaxLags * 16];
  const int stride = degree_ + 1;
  if (stride > 16) throw ValidationError("basis degree must be at most 15");
  for (int a = 0; a < dim_; ++a) {
    double v = 1.0;
    for (int p = 0; p <= degree_; ++p) {
      powers[a * stride + p] = v;
      v *= state.lags[a];
    }
  }
  for (std::size_t j = 0; j < exponents_.size(); ++j) {
    double f = 1.0;
    const auto& ex = exponents_[j];
    for (int a = 0; a < dim_; ++a) {
      if (ex[static_cast<std::size_t>(a)]) f *= powers[a * stride + ex[static_cast<std::size_t>(a)]];
    }
    out[j] = f;
  }
}

double PolynomialBasis::evaluate(const Eigen::VectorXd& coefficients,
                                 const AugmentedState& state) const {
  double buf[4096];
  if (size() > 4096) throw ValidationError("basis too large");
  features(state, std::span<double>(buf, size()));
  double v = 0.0;
  for (std::size_t j = 0; j < size(); ++j) v += coefficients[static_cast<Eigen::Index>(j)] * buf[j];
  return v;
}

Eigen::VectorXd fit_regression_step(const std::vector<AugmentedState>& states,
                                    const std::vector<double>& targets,
                                    const PolynomialBasis& basis, double ridge) {
  const auto n = static_cast<Eigen::Index>(states.size());
  const auto b = static_cast<Eigen::Index>(basis.size());
  if (states.size() != targets.size()) throw ValidationError("one target per sample is required");
  if (n < b) {
    throw ValidationError("regression needs at least " + std::to_string(b) + " samples, got " +
                          std::to_string(n));
  }
  if (!(ridge >= 0.0)) throw ValidationError("ridge penalty must be >= 0");

  const Eigen::Index rows = ridge > 0.0 ? n + b : n;
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(rows, b);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
  std::vector<double> row(basis.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double y = targets[static_cast<std::size_t>(i)];
    if (!std::isfinite(y)) throw RuntimeFailure("non-finite regression target at sample " + std::to_string(i));
    basis.features(states[static_cast<std::size_t>(i)], row);
    for (Eigen::Index j = 0; j < b; ++j) design(i, j) = row[static_cast<std::size_t>(j)];
    rhs[i] = y;
  }
  if (ridge > 0.0) {
    design.bottomRows(b).diagonal().setConstant(std::sqrt(ridge));
    return design.householderQr().solve(rhs);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (qr.rank() < b) {
    throw ValidationError("regression design is rank deficient (rank " + std::to_string(qr.rank()) +
                          " < " + std::to_string(b) + "); use a ridge penalty > 0");
  }
  return qr.solve(rhs);
}

}  // namespace impulse
