#pragma once

// Baseline ratio estimators: the empirical ratio of sums and the estimators
// obtained by inverting the sign test and the Wilcoxon signed-rank test of
// residual symmetry about zero.

#include <span>
#include <string_view>
#include <vector>

#include "tmatch/interval.hpp"
#include "tmatch/paired_data.hpp"

namespace tmatch {

enum class TestStatisticKind { kSign, kRank };

[[nodiscard]] std::string_view to_string(TestStatisticKind kind);

// sum(y) / sum(x). Throws Error(kUnidentifiedRatio) when sum(x) == 0.
[[nodiscard]] double empirical_estimate(std::span<const PairedDifference> diffs);

// sum_i s_i / 2 with s_i the sign of the residual at theta (0 for exact zeros).
[[nodiscard]] double sign_statistic(std::span<const PairedDifference> diffs, double theta);

// sum_i sgn(e_i) * rank(|e_i|); exact zeros dropped, tied magnitudes mid-ranked.
[[nodiscard]] double rank_statistic(std::span<const PairedDifference> diffs, double theta);

[[nodiscard]] double test_statistic(std::span<const PairedDifference> diffs, double theta,
                                    TestStatisticKind kind);

// The statistic as an exact step function of theta. `values[k]` holds the
// value on the open interval (breakpoints[k-1], breakpoints[k]) with
// breakpoints[-1] = -inf and breakpoints[size] = +inf. Only points where the
// value actually changes are listed.
struct StatisticProfile {
  std::vector<double> breakpoints;
  std::vector<double> values;
  // Pairs that carry information (a pair with x = y = 0 never does).
  std::size_t effective_n = 0;
};

// The sign statistic changes at y_i / x_i. The rank statistic equals
// sum_{i<=j} sgn(e_i + e_j) away from its breakpoints, so it changes only at
// (y_i + y_j) / (x_i + x_j).
[[nodiscard]] StatisticProfile statistic_profile(std::span<const PairedDifference> diffs,
                                                 TestStatisticKind kind);

struct TestBasedEstimate {
  double point = 0.0;  // midpoint of the argmin hull; +-inf when one side is open
  double argmin_lower = 0.0;
  double argmin_upper = 0.0;
  double min_abs_statistic = 0.0;

  [[nodiscard]] bool bounded() const;
};

// Midpoint of the smallest and largest theta minimizing |M(theta)|. At a
// breakpoint M is taken as the mean of its two one-sided limits: the sign
// statistic's own value there, and for the rank statistic the value with the
// zeroed residual kept at sign 0 (dropping it would create isolated dips).
// Throws Error(kUnidentifiedRatio) when the argmin is unbounded on both sides
// and Error(kInvalidInput) for fewer than 2 pairs.
[[nodiscard]] TestBasedEstimate test_based_estimate(std::span<const PairedDifference> diffs,
                                                    TestStatisticKind kind);

// Hull of {theta : |M(theta)| <= q}, q the exact (1 - alpha/2) null quantile
// (sign: binomial; rank: exact up to 25 pairs, normal approximation above).
// Breakpoints use the same convention as the estimate. If nothing reaches q
// the argmin hull is returned, so the interval always contains the point
// estimate. Endpoints may be infinite.
[[nodiscard]] ConfidenceInterval test_based_ci(std::span<const PairedDifference> diffs,
                                               TestStatisticKind kind, double alpha);

struct TestBasedInference {
  TestBasedEstimate estimate;
  ConfidenceInterval interval;
};

// Both of the above from a single profile.
[[nodiscard]] TestBasedInference test_based_inference(std::span<const PairedDifference> diffs,
                                                      TestStatisticKind kind, double alpha);

// Building blocks shared with tests: argmin hull and threshold hull of a profile.
[[nodiscard]] TestBasedEstimate estimate_from_profile(const StatisticProfile& profile);
[[nodiscard]] ConfidenceInterval interval_from_profile(const StatisticProfile& profile,
                                                       double threshold);

}  // namespace tmatch
