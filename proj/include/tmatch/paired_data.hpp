#pragma once

// Paired-experiment observations: geo-pair outcomes, treatment-minus-control
// differences, residuals at a candidate ratio, and the distributional
// diagnostics used to judge heavy tails and residual symmetry.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tmatch {

// One matched pair of geos. `assignment` is +1 when the first geo is treated
// and -1 when the second geo is treated.
struct GeoPairOutcome {
  std::string pair_id;
  double spend_first = 0.0;
  double response_first = 0.0;
  double spend_second = 0.0;
  double response_second = 0.0;
  int assignment = 1;
};

// Spend delta `x` and response delta `y` (treatment minus control) for one pair.
struct PairedDifference {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PairedDifference&, const PairedDifference&) = default;
};

// Residuals y_i - theta * x_i, in the order of the source differences.
struct ResidualVector {
  std::vector<double> values;
  double theta = 0.0;
};

// Throws Error(kInvalidInput) naming the offending pair on a bad assignment
// or a non-finite field.
[[nodiscard]] std::vector<PairedDifference> compute_differences(
    std::span<const GeoPairOutcome> outcomes);

[[nodiscard]] ResidualVector residuals(std::span<const PairedDifference> diffs, double theta);

// Residual values only, written into `out` (resized to diffs.size()).
void residuals_into(std::span<const PairedDifference> diffs, double theta,
                    std::vector<double>& out);

inline constexpr double kDefaultTieScale = 1e-10;

// Breaks ties among the spend deltas (and among pairwise crossing points
// (y_j - y_i) / (x_j - x_i)) with a seeded uniform jitter of magnitude
// `relative_scale * (max x - min x)`. Tie-free data comes back unchanged.
// When only x ties exist, only the later members of each tied group move.
// Throws Error(kDegenerateData) when every x is identical.
[[nodiscard]] std::vector<PairedDifference> perturb_ties(
    std::span<const PairedDifference> diffs, double relative_scale = kDefaultTieScale,
    std::uint64_t seed = 0);

// True when the x values are pairwise distinct and all finite crossing points
// are pairwise distinct.
[[nodiscard]] bool is_tie_free(std::span<const PairedDifference> diffs);

// Non-excess kurtosis m4 / m2^2 with population central moments, so a normal
// sample gives about 3 (not 0, as libraries reporting excess kurtosis would).
// Requires at least 4 values; throws Error(kDegenerateData) on zero variance.
[[nodiscard]] double sample_kurtosis(std::span<const double> values);

// Two-sided Wilcoxon signed-rank p-value for symmetry about zero. Exact zeros
// are dropped and tied magnitudes share mid-ranks. The null distribution is
// exact (conditional on the tie pattern) for up to 25 nonzero values and a
// continuity-corrected normal approximation above that. All-zero input gives 1.
[[nodiscard]] double residual_symmetry_test(std::span<const double> residuals);

inline double residual_symmetry_test(const ResidualVector& residuals) {
  return residual_symmetry_test(std::span<const double>(residuals.values));
}

}  // namespace tmatch
