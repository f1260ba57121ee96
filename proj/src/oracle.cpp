#include "impulse/oracle.hpp"

#include "impulse/format.hpp"
#include "impulse/snell.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>

namespace impulse {

using nlohmann::json;

namespace {

std::string normalize_name(const std::string& name) {
  std::string out;
  for (const char c : name) {
    if (c != '-' && c != '_') out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

std::size_t horizon_depth(const TreeProblem& p) { return p.grid.n_steps; }

// Root-to-node chain of node indices (root first).
std::vector<std::size_t> chain_to(const FiniteTree& tree, std::size_t node) {
  std::vector<std::size_t> out;
  for (std::size_t i = node;; i = tree.nodes[i].parent) {
    out.push_back(i);
    if (i == 0) break;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

AugmentedState lifted_start(const ProblemSpec& spec) {
  const auto m = static_cast<int>(spec.initial_segment.size());
  LagVector lags(m);
  for (int j = 0; j < m; ++j) lags[j] = spec.initial_segment[static_cast<std::size_t>(m - 1 - j)][0];
  return AugmentedState(std::move(lags));
}

// Walks the tree in BFS order, asking `choose` for each decision node.
template <typename Choose>
std::vector<AugmentedState> walk(const TreeProblem& p, Choose&& choose) {
  const auto& tree = p.tree;
  std::vector<AugmentedState> pre(tree.size());
  std::vector<std::size_t> used(tree.size(), 0);
  pre[0] = lifted_start(p.spec);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& node = tree.nodes[i];
    if (node.depth >= horizon_depth(p)) continue;
    AugmentedState post = pre[i];
    std::size_t n_used = used[i];
    const int c = choose(i, pre[i], used[i]);
    if (c > 0) {
      post = impulse_transition(post, p.u_grid[static_cast<std::size_t>(c - 1)], p.spec);
      ++n_used;
    }
    const double t = p.grid.time(static_cast<std::ptrdiff_t>(node.depth));
    for (const auto child : node.children) {
      pre[child] = step_transition(post, t, tree.nodes[child].increment, p.spec, p.grid.dt);
      used[child] = n_used;
    }
  }
  return pre;
}

}  // namespace

NoiseQuadrature tree_quadrature(int n, double dt) { return NoiseQuadrature::gauss_hermite(n, dt); }

TreeProblem make_tree_problem(std::string name, ProblemSpec spec, const TimeGrid& grid,
                              NoiseQuadrature quadrature, std::vector<Vector> u_grid) {
  if (spec.dim != 1) throw ValidationError("tree problems must be scalar");
  quadrature.check_moments(grid.dt);
  std::vector<double> inc, prob;
  for (const auto& n : quadrature.nodes) {
    inc.push_back(n.increment);
    prob.push_back(n.weight);
  }
  TreeProblem p;
  p.name = std::move(name);
  p.spec = std::move(spec);
  p.grid = grid;
  p.quadrature = std::move(quadrature);
  p.tree = FiniteTree::uniform(grid.n_steps, inc, prob);
  p.u_grid = std::move(u_grid);
  return p;
}

ProblemConfig tiny_problem_config(const std::string& name, std::optional<double> drift_a) {
  const std::string key = normalize_name(name);
  double a = 0.0;
  if (key == "TINY1") {
    a = drift_a.value_or(0.0);
  } else if (key == "TINY2") {
    a = drift_a.value_or(1.0);
  } else {
    throw ValidationError("unknown tiny instance \"" + name + "\" (expected TINY-1 or TINY-2)");
  }
  const json j = {
      {"horizon", 1.0},
      {"delay", 0.0},
      {"dimension", 1},
      {"drift", {{"kind", "linear_delay_feedback"}, {"a", a}, {"k_p", 0.0}}},
      {"diffusion", {{"kind", "constant"}, {"sigma", 1.0}}},
      {"intervention", {{"kind", "additive"}}},
      {"running_reward", {{"kind", "quadratic"}, {"weight", -1.0}}},
      {"terminal_reward", {{"kind", "quadratic"}, {"weight", -1.0}}},
      {"impulse_cost", {{"kind", "quadratic"}, {"fixed", 0.1}, {"quadratic", 0.1}}},
      {"impulse_set", {{"lower", {-1.0}}, {"upper", {1.0}}}},
      {"initial_segment", {{"kind", "constant"}, {"value", {0.0}}}},
      {"cost_floor", 0.05},
  };
  return problem_config_from_json(j);
}

TreeProblem build_tiny_instance(const std::string& name, std::optional<double> drift_a) {
  const auto cfg = tiny_problem_config(name, drift_a);
  const double dt = 0.5;
  const auto grid = TimeGrid::make(cfg.horizon, cfg.delay, dt);
  auto spec = build_problem(cfg, dt);
  const int branching = normalize_name(name) == "TINY1" ? 2 : 3;
  const auto u_grid = impulse_grid(spec.impulse_set, 3);
  return make_tree_problem(normalize_name(name) == "TINY1" ? "TINY-1" : "TINY-2", std::move(spec),
                           grid, tree_quadrature(branching, dt), u_grid);
}

double evaluate_table(const TreeProblem& p, const DecisionTable& table, std::size_t max_impulses) {
  const auto& tree = p.tree;
  if (table.size() != tree.size()) throw ValidationError("decision table size does not match the tree");
  const std::size_t n = horizon_depth(p);
  if (tree.depth() != n) throw ValidationError("tree depth does not match the time grid");
  double expected = 0.0;
  for (std::size_t leaf = 0; leaf < tree.size(); ++leaf) {
    if (!tree.is_leaf(leaf)) continue;
    const auto chain = chain_to(tree, leaf);
    Eigen::MatrixXd inc(static_cast<Eigen::Index>(n), 1);
    double prob = 1.0;
    std::vector<ImpulseEvent> events;
    for (std::size_t j = 0; j < chain.size(); ++j) {
      const auto& node = tree.nodes[chain[j]];
      if (j > 0) {
        inc(static_cast<Eigen::Index>(j - 1), 0) = node.increment;
        prob *= node.probability;
      }
      const int c = table[chain[j]];
      if (c < 0 || c > static_cast<int>(p.u_grid.size())) {
        throw ValidationError("decision table entry out of range");
      }
      if (c > 0 && node.depth < n) {
        events.push_back({p.grid.time(static_cast<std::ptrdiff_t>(node.depth)),
                          p.u_grid[static_cast<std::size_t>(c - 1)]});
      }
    }
    if (events.size() > max_impulses) {
      throw ValidationError("decision table exceeds the impulse budget");
    }
    const ImpulseControl control(std::move(events));
    const auto traj =
        simulate_controlled(p.spec, control, NoiseDraw::from_increments(inc, p.grid.dt), p.grid);
    expected += prob * total_payoff(p.spec, traj, control);
  }
  return expected;
}

EnumerationResult enumerate_controls(const TreeProblem& p, std::size_t max_impulses) {
  const auto& tree = p.tree;
  const std::size_t n = horizon_depth(p);
  if (tree.depth() != n) throw ValidationError("tree depth does not match the time grid");
  tree.check_probabilities();
  std::vector<std::size_t> decision_nodes;
  std::size_t leaves = 0;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (tree.nodes[i].depth < n) decision_nodes.push_back(i);
    if (tree.is_leaf(i)) ++leaves;
  }
  const int choices = static_cast<int>(p.u_grid.size()) + 1;
  const double work = std::pow(static_cast<double>(choices), static_cast<double>(decision_nodes.size())) *
                      static_cast<double>(leaves);
  if (work > kEnumerationBudget) {
    throw ValidationError("enumeration needs about " + format_double(work) +
                          " path evaluations, above the 1e7 guard");
  }

  EnumerationResult best;
  DecisionTable table(tree.size(), 0);
  std::vector<std::size_t> used(tree.size(), 0);
  bool first = true;
  while (true) {
    // Impulse count along each path, BFS order puts parents first.
    bool feasible = true;
    for (std::size_t i = 0; i < tree.size() && feasible; ++i) {
      const std::size_t before = i == 0 ? 0 : used[tree.nodes[i].parent];
      used[i] = before + (table[i] > 0 ? 1 : 0);
      if (used[i] > max_impulses) feasible = false;
    }
    if (feasible) {
      const double v = evaluate_table(p, table, max_impulses);
      ++best.tables_evaluated;
      if (first || v > best.best_value + 1e-12) {
        best.best_value = v;
        best.best_table = table;
        first = false;
      }
    }
    // Odometer: the last decision node is the least significant digit.
    std::size_t d = decision_nodes.size();
    while (d > 0) {
      auto& digit = table[decision_nodes[d - 1]];
      if (++digit < choices) break;
      digit = 0;
      --d;
    }
    if (d == 0) break;
  }
  return best;
}

DecisionTable policy_table(const TreeProblem& p, const DecisionRule& rule) {
  DecisionTable table(p.tree.size(), 0);
  walk(p, [&](std::size_t node, const AugmentedState& state, std::size_t used) {
    const auto u = rule.decide(p.tree.nodes[node].depth, state, used);
    if (!u) return 0;
    for (std::size_t i = 0; i < p.u_grid.size(); ++i) {
      if (p.u_grid[i] == *u) return table[node] = static_cast<int>(i) + 1;
    }
    throw ValidationError("rule chose an impulse outside the impulse grid");
  });
  return table;
}

std::vector<AugmentedState> table_states(const TreeProblem& p, const DecisionTable& table) {
  if (table.size() != p.tree.size()) throw ValidationError("decision table size does not match the tree");
  return walk(p, [&](std::size_t node, const AugmentedState&, std::size_t) { return table[node]; });
}

json table_to_json(const TreeProblem& p, const DecisionTable& table) {
  const auto states = table_states(p, table);
  json nodes = json::array();
  for (std::size_t i = 0; i < p.tree.size(); ++i) {
    const auto& node = p.tree.nodes[i];
    if (node.depth >= horizon_depth(p)) continue;
    json entry = {{"node", i},
                  {"parent", i == 0 ? json(nullptr) : json(node.parent)},
                  {"time", p.grid.time(static_cast<std::ptrdiff_t>(node.depth))},
                  {"state", states[i].head()}};
    if (table[i] == 0) entry["action"] = "continue";
    else entry["action"] = p.u_grid[static_cast<std::size_t>(table[i] - 1)][0];
    nodes.push_back(std::move(entry));
  }
  return {{"instance", p.name}, {"nodes", nodes}};
}

SnellResult exact_snell_on_tree(const FiniteTree& tree, const std::vector<double>& rewards) {
  if (rewards.size() != tree.size()) throw ValidationError("one reward per node required");
  SnellResult r;
  r.envelope.assign(tree.size(), 0.0);
  r.stop.assign(tree.size(), true);
  std::function<double(std::size_t)> visit = [&](std::size_t i) {
    const auto& node = tree.nodes[i];
    double z = rewards[i];
    if (!node.children.empty()) {
      double cont = 0.0;
      for (const auto c : node.children) cont += tree.nodes[c].probability * visit(c);
      z = std::max(rewards[i], cont);
    }
    r.envelope[i] = z;
    r.stop[i] = z == rewards[i];
    return z;
  };
  if (!tree.nodes.empty()) visit(0);
  return r;
}

double stopping_rule_value(const FiniteTree& tree, const std::vector<double>& rewards,
                           const std::vector<bool>& stop) {
  std::function<double(std::size_t)> visit = [&](std::size_t i) {
    const auto& node = tree.nodes[i];
    if (stop[i] || node.children.empty()) return rewards[i];
    double v = 0.0;
    for (const auto c : node.children) v += tree.nodes[c].probability * visit(c);
    return v;
  };
  return visit(0);
}

std::vector<OracleComparisonRow> compare_with_oracle(const TreeProblem& p, std::size_t k_max) {
  SolverOptions opts;
  opts.backend = Backend::Grid;
  opts.grid_kind = GridKind::Reachable;
  opts.k_max = k_max;
  opts.tol = 1e-300;  // only an exactly stationary iterate stops early
  opts.impulse_points = static_cast<int>(p.u_grid.size());
  auto solved = k_value_iteration(p.spec, p.grid, opts, p.quadrature);
  if (solved.impulse_grid != p.u_grid) {
    throw ValidationError("tree problem impulse grid is not the uniform grid over U");
  }
  while (solved.iterates.size() <= k_max) {
    ValueFunction next = solved.iterates.back();
    ++next.k;
    solved.iterates.push_back(std::move(next));
    solved.initial_values.push_back(solved.initial_values.back());
  }
  std::vector<OracleComparisonRow> rows;
  for (std::size_t k = 1; k <= k_max; ++k) {
    OracleComparisonRow row;
    row.k = k;
    row.dp_value = solved.initial_values[k];
    const auto oracle = enumerate_controls(p, k);
    row.oracle_value = oracle.best_value;
    row.oracle_table = oracle.best_table;
    const auto policy = extract_budgeted_policy(solved.iterates, k, p.spec, p.u_grid);
    row.policy_table = policy_table(p, policy);
    row.policy_value = evaluate_table(p, row.policy_table, k);
    row.table_match = row.policy_table == row.oracle_table;
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace impulse
