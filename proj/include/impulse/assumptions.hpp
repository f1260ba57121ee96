#pragma once

#include "impulse/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace impulse {

struct AssumptionOptions {
  std::size_t sample_budget = 10000;
  std::uint64_t seed = 1;
  double radius = 10.0;            // states sampled in [-radius, radius]^d
  double lipschitz_limit = 1e3;    // largest acceptable empirical Lipschitz ratio
  double growth_constant = 1.0;    // C in |Gamma(x, u)| <= max(C, |x|)
  std::vector<std::string> advisory;  // check names reported but not enforced
};

struct AssumptionCheck {
  std::string name;
  bool passed = true;
  bool advisory = false;
  double statistic = 0.0;
  double limit = 0.0;
  std::string comparison;     // "<=" or ">" between statistic and limit
  std::vector<double> witness;  // worst sample: t, x.., y.., u.., v..
};

struct AssumptionReport {
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  std::vector<AssumptionCheck> checks;

  /// All non-advisory checks passed.
  bool passed() const;
  const AssumptionCheck& at(const std::string& name) const;
};

/// Monte Carlo screening of the regularity conditions: empirical Lipschitz
/// ratios of drift, diffusion, running reward, impulse cost and Gamma, the
/// growth bound |Gamma(x, u)| <= max(C, |x|), and cost > K6. Report-only:
/// failures are entries, never exceptions.
AssumptionReport check_assumptions(const ProblemSpec& spec, const AssumptionOptions& options);

}  // namespace impulse
