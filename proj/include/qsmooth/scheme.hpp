#pragma once

#include <string_view>

namespace qsmooth {

// Measurement scheme. Dual homodyne splits the beam and sees flux N/2.
enum class Scheme { adaptive, dual_homodyne };

// Final-estimate family: causal (filtered) or time-symmetric (smoothed).
enum class EstimatorMode { filtered, smoothed };

inline std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::adaptive ? "adaptive" : "dual_homodyne";
}

inline std::string_view to_string(EstimatorMode mode) {
  return mode == EstimatorMode::filtered ? "filtered" : "smoothed";
}

}  // namespace qsmooth
