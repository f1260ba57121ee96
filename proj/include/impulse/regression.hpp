#pragma once

#include "impulse/lattice.hpp"

#include <Eigen/Dense>

#include <span>
#include <vector>

namespace impulse {

/// Monomials of total degree <= degree in `dim` variables, graded order
/// starting with the constant.
class PolynomialBasis {
 public:
  PolynomialBasis(int dim, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  std::size_t size() const { return exponents_.size(); }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }

  void features(const AugmentedState& state, std::span<double> out) const;
  double evaluate(const Eigen::VectorXd& coefficients, const AugmentedState& state) const;

 private:
  int dim_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
};

/// Ridge-regularized least squares: argmin |targets - Phi c|^2 + ridge |c|^2.
/// With ridge == 0 a rank-deficient design is an error.
Eigen::VectorXd fit_regression_step(const std::vector<AugmentedState>& states,
                                    const std::vector<double>& targets,
                                    const PolynomialBasis& basis, double ridge);

}  // namespace impulse
