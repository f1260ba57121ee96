#pragma once

#include <cstddef>
#include <vector>

namespace impulse {

/// Finite, non-recombining tree of noise outcomes. Nodes are stored in
/// breadth-first order with the root at index 0.
struct FiniteTree {
  struct Node {
    std::size_t parent = 0;
    std::size_t depth = 0;
    double increment = 0.0;  // noise increment on the edge from the parent
    double probability = 1.0;  // conditional probability given the parent
    std::vector<std::size_t> children;
  };
  std::vector<Node> nodes;

  std::size_t size() const { return nodes.size(); }
  std::size_t depth() const;
  bool is_leaf(std::size_t i) const { return nodes[i].children.empty(); }

  /// Tree of the given depth with identical branching at every node.
  static FiniteTree uniform(std::size_t depth, const std::vector<double>& increments,
                            const std::vector<double>& probabilities);

  /// Throws ValidationError unless every node's child probabilities sum to 1.
  void check_probabilities(double tol = 1e-12) const;
};

}  // namespace impulse
