#pragma once

// Data-driven trim rate: the trim count whose Trimmed Match interval at a
// fixed internal level 1 - alpha0 is narrowest.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tmatch/paired_data.hpp"
#include "tmatch/report.hpp"
#include "tmatch/trimmed_match.hpp"

namespace tmatch {

inline constexpr double kDefaultAlpha0 = 0.5;
inline constexpr double kDefaultLambdaMax = 0.25;

struct TrimRateChoice {
  double lambda_hat = 0.0;  // m_hat / n
  std::size_t m_hat = 0;
  // (m, width) for every m searched; unbounded or degenerate intervals are +inf.
  std::vector<std::pair<std::size_t, double>> ci_width_by_m;
  double alpha0 = kDefaultAlpha0;
};

// Trim counts searched: 0 .. min(floor(n * lambda_max), floor((n - 2) / 2)).
[[nodiscard]] std::size_t max_trim_count(std::size_t n, double lambda_max);

// Widths within 1e-9 relative of each other count as ties and go to the
// smaller m. Throws Error(kSelectionFailed) when every width is infinite and
// Error(kInvalidInput) for fewer than 5 pairs.
[[nodiscard]] TrimRateChoice select_trim_rate(const TrimmedMatchSolver& solver,
                                              double alpha0 = kDefaultAlpha0,
                                              double lambda_max = kDefaultLambdaMax);
[[nodiscard]] TrimRateChoice select_trim_rate(std::span<const PairedDifference> diffs,
                                              double alpha0 = kDefaultAlpha0,
                                              double lambda_max = kDefaultLambdaMax);

struct AutoTrimFit {
  TrimRateChoice choice;
  TrimmedMatchFit fit;
};

// Selects m at alpha0, then fits point and (1 - alpha) t interval at that m.
[[nodiscard]] AutoTrimFit fit_with_auto_trim(const TrimmedMatchSolver& solver, double alpha,
                                             double alpha0 = kDefaultAlpha0,
                                             double lambda_max = kDefaultLambdaMax);

[[nodiscard]] EstimateReport estimate_with_auto_trim(std::span<const PairedDifference> diffs,
                                                     double alpha,
                                                     double lambda_max = kDefaultLambdaMax,
                                                     std::uint64_t tie_seed = 0);

}  // namespace tmatch
