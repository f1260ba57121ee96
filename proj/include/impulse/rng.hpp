#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace impulse {

/// Stateless counter-based generator: every draw is a pure function of
/// (seed, stream, path, step, lane), so results do not depend on the order
/// in which paths or steps are evaluated.
class CounterRng {
 public:
  constexpr explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(mix(seed ^ 0x243f6a8885a308d3ULL) ^ stream)) {}

  constexpr std::uint64_t bits(std::uint64_t path, std::uint64_t step, std::uint64_t lane) const {
    return mix(mix(mix(key_ ^ path) ^ step) ^ lane);
  }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t path, std::uint64_t step, std::uint64_t lane) const {
    return (static_cast<double>(bits(path, step, lane) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two independent lanes.
  double normal(std::uint64_t path, std::uint64_t step, std::uint64_t lane) const {
    const double u1 = uniform(path, step, 2 * lane);
    const double u2 = uniform(path, step, 2 * lane + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  // SplitMix64 finalizer.
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

// Stream tags keep independent uses of one seed apart.
inline constexpr std::uint64_t kBrownianStream = 1;
inline constexpr std::uint64_t kExplorationStream = 2;
inline constexpr std::uint64_t kAssumptionStream = 3;

}  // namespace impulse
