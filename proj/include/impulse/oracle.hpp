#pragma once

#include "impulse/policy.hpp"
#include "impulse/problem_config.hpp"
#include "impulse/simulate.hpp"
#include "impulse/tree.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace impulse {

/// A problem whose noise is a finite tree: one tree level per grid step.
struct TreeProblem {
  std::string name;
  ProblemSpec spec;
  TimeGrid grid;
  NoiseQuadrature quadrature;  // branching law at every node
  FiniteTree tree;
  std::vector<Vector> u_grid;
};

TreeProblem make_tree_problem(std::string name, ProblemSpec spec, const TimeGrid& grid,
                              NoiseQuadrature quadrature, std::vector<Vector> u_grid);

/// Problem parameters of the small reference instances. TINY-1: no drift,
/// unit diffusion, Bernoulli +-sqrt(dt) noise. TINY-2: drift a x (default
/// a = 1) and three-point noise. Both: T = 1, dt = 0.5, no delay, Gamma = x + u,
/// U_grid = {-1, 0, 1}, f = g = -x^2, cost 0.1 (1 + u^2), X_0 = 0.
ProblemConfig tiny_problem_config(const std::string& name, std::optional<double> drift_a = {});
TreeProblem build_tiny_instance(const std::string& name, std::optional<double> drift_a = {});

/// Branching law of tree problems: the n-point Gauss-Hermite rule, i.e.
/// Bernoulli +-sqrt(dt) for n = 2 and {-sqrt(3 dt), 0, sqrt(3 dt)} with
/// weights {1/6, 2/3, 1/6} for n = 3.
NoiseQuadrature tree_quadrature(int n, double dt);

// Decision per tree node: 0 = CONTINUE, c >= 1 = impulse u_grid[c - 1].
// Nodes at the horizon carry 0.
using DecisionTable = std::vector<int>;

struct EnumerationResult {
  double best_value = 0.0;
  DecisionTable best_table;
  std::size_t tables_evaluated = 0;
};

inline constexpr double kEnumerationBudget = 1e7;

/// Exhaustive search over all adapted decision tables with at most
/// `max_impulses` impulses along every root-leaf path. Each table is scored
/// by simulating every leaf path and weighting its payoff by the path
/// probability. Ties within 1e-12 keep the lexicographically smaller table
/// (node 0 most significant, CONTINUE smallest).
EnumerationResult enumerate_controls(const TreeProblem& problem, std::size_t max_impulses);

/// Expected payoff of a decision table; throws if it exceeds `max_impulses`
/// on some path.
double evaluate_table(const TreeProblem& problem, const DecisionTable& table,
                      std::size_t max_impulses);

/// Table induced by a feedback rule walked over the tree.
DecisionTable policy_table(const TreeProblem& problem, const DecisionRule& rule);

/// Pre-decision lifted states at every node when following `table`.
std::vector<AugmentedState> table_states(const TreeProblem& problem, const DecisionTable& table);

nlohmann::json table_to_json(const TreeProblem& problem, const DecisionTable& table);

struct SnellResult {
  std::vector<double> envelope;
  std::vector<bool> stop;  // envelope == reward (always true at leaves)
};

/// Envelope by direct recursion from the root; stop where Z equals the reward.
SnellResult exact_snell_on_tree(const FiniteTree& tree, const std::vector<double>& rewards);

/// Expected reward at the first stopping node along each path.
double stopping_rule_value(const FiniteTree& tree, const std::vector<double>& rewards,
                           const std::vector<bool>& stop);

struct OracleComparisonRow {
  std::size_t k = 0;
  double dp_value = 0.0;
  double oracle_value = 0.0;
  double policy_value = 0.0;  // expected payoff of the extracted policy's table
  bool table_match = false;
  DecisionTable oracle_table;
  DecisionTable policy_table;
};

/// Runs the reachable-set grid solver with the tree's noise law and compares
/// V^k(0, x0) and the budgeted policy with exhaustive enumeration, k = 1..k_max.
std::vector<OracleComparisonRow> compare_with_oracle(const TreeProblem& problem,
                                                     std::size_t k_max);

}  // namespace impulse
