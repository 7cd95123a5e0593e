#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "dysflux/annotation.hpp"

namespace dysflux {

/// Bound-loss frame length.
inline constexpr double kFrameSeconds = 0.020;
inline constexpr double kTimingTolerance = 1e-6;

struct TimedUnit {
  std::string unit;
  TimeBound bound;

  friend bool operator==(const TimedUnit&, const TimedUnit&) = default;
};

/// A zero-width locus widened to one frame centred on `t`, shifted right
/// when it would start before zero.
inline TimeBound frame_bound_at(double t) {
  const double start = std::max(0.0, t - kFrameSeconds / 2);
  return TimeBound{start, start + kFrameSeconds};
}

/// Each unit must end before the next one starts.
inline bool is_monotone(const std::vector<TimedUnit>& units) {
  for (std::size_t k = 0; k < units.size(); ++k) {
    if (!(units[k].bound.end > units[k].bound.start) || units[k].bound.start < 0.0) return false;
    if (k + 1 < units.size() && units[k].bound.end > units[k + 1].bound.start + kTimingTolerance) {
      return false;
    }
  }
  return true;
}

inline std::vector<std::string> unit_symbols(const std::vector<TimedUnit>& units) {
  std::vector<std::string> out;
  out.reserve(units.size());
  for (const auto& u : units) out.push_back(u.unit);
  return out;
}

}  // namespace dysflux
