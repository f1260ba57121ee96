#pragma once

#include "impulse/tree.hpp"

#include <vector>

namespace impulse {

/// Discrete-time Snell envelope of `rewards` on a finite tree: leaves take
/// their reward, interior nodes max(reward, sum_child p * Z_child).
/// Throws ValidationError if a node's probabilities do not sum to 1.
std::vector<double> snell_envelope_discrete(const FiniteTree& tree,
                                            const std::vector<double>& rewards);

}  // namespace impulse
