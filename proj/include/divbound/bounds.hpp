#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "divbound/error.hpp"

namespace divbound {

/// A certified [lower, upper] enclosure of a divergence.
struct BoundInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool lower_clipped = false;
  bool upper_clipped = false;
  std::string regime;              ///< which case of the bound applies
  std::vector<std::string> notes;  ///< provenance and diagnostics

  bool contains(double v, double slack = 0.0) const { return v >= lower - slack && v <= upper + slack; }
  double width() const { return upper - lower; }
};

namespace detail {

/// Clips an interval to [lo, hi] and records which side moved.
inline void clip_interval(BoundInterval& b, double lo, double hi) {
  if (b.lower < lo) {
    b.lower = lo;
    b.lower_clipped = true;
  }
  if (b.upper > hi) {
    b.upper = hi;
    b.upper_clipped = true;
  }
  if (b.lower > hi) {
    b.lower = hi;
    b.lower_clipped = true;
  }
  if (b.upper < lo) {
    b.upper = lo;
    b.upper_clipped = true;
  }
}

inline void check_ordered(const BoundInterval& b, double tol, const char* what) {
  if (!(b.lower <= b.upper + tol))
    fail(Errc::internal, std::string(what) + ": lower bound " + std::to_string(b.lower) + " exceeds upper bound " +
                             std::to_string(b.upper));
}

}  // namespace detail

}  // namespace divbound
