#pragma once

#include <cmath>

namespace tmatch {

// Closed interval of ratios; either endpoint may be infinite.
struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;

  [[nodiscard]] bool bounded() const { return std::isfinite(lower) && std::isfinite(upper); }
  [[nodiscard]] double width() const { return upper - lower; }
  [[nodiscard]] bool contains(double v) const { return lower <= v && v <= upper; }
};

}  // namespace tmatch
