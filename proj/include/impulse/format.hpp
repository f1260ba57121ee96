#pragma once

#include <cstdio>
#include <string>

namespace impulse {

/// Shortest round-trip-safe text form of a double, stable across runs.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace impulse
