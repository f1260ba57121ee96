#include "impulse/snell.hpp"

#include "impulse/core.hpp"

#include <algorithm>
#include <cmath>

namespace impulse {

std::size_t FiniteTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

FiniteTree FiniteTree::uniform(std::size_t depth, const std::vector<double>& increments,
                               const std::vector<double>& probabilities) {
  if (increments.empty() || increments.size() != probabilities.size()) {
    throw ValidationError("branching increments and probabilities must match and be nonempty");
  }
  FiniteTree tree;
  tree.nodes.push_back({});
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].depth == depth) continue;
    for (std::size_t b = 0; b < increments.size(); ++b) {
      Node child;
      child.parent = i;
      child.depth = tree.nodes[i].depth + 1;
      child.increment = increments[b];
      child.probability = probabilities[b];
      tree.nodes[i].children.push_back(tree.nodes.size());
      tree.nodes.push_back(child);
    }
  }
  return tree;
}

void FiniteTree::check_probabilities(double tol) const {
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].children.empty()) continue;
    double total = 0.0;
    for (auto c : nodes[i].children) {
      if (!(nodes[c].probability >= 0.0)) throw ValidationError("negative branch probability");
      total += nodes[c].probability;
    }
    if (std::abs(total - 1.0) > tol) {
      throw ValidationError("probabilities at node " + std::to_string(i) + " do not sum to 1");
    }
  }
}

std::vector<double> snell_envelope_discrete(const FiniteTree& tree,
                                            const std::vector<double>& rewards) {
  if (rewards.size() != tree.size()) throw ValidationError("one reward per node is required");
  tree.check_probabilities();
  std::vector<double> z(tree.size());
  // Breadth-first storage: every child comes after its parent.
  for (std::size_t i = tree.size(); i-- > 0;) {
    const auto& node = tree.nodes[i];
    if (node.children.empty()) {
      z[i] = rewards[i];
      continue;
    }
    double continuation = 0.0;
    for (auto c : node.children) continuation += tree.nodes[c].probability * z[c];
    z[i] = std::max(rewards[i], continuation);
  }
  return z;
}

}  // namespace impulse
