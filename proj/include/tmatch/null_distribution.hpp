#pragma once

// Null distributions of the symmetry test statistics under independent fair
// random signs, plus thin wrappers around the continuous quantile functions.

#include <cstddef>
#include <span>
#include <vector>

namespace tmatch::null_dist {

// Largest sample size for which signed-rank probabilities are enumerated
// exactly; above it a normal approximation with continuity correction is used.
inline constexpr std::size_t kExactRankLimit = 25;

// Exact distribution of W+ = sum of ranks {1..n} carrying a positive sign.
// Entry w is P(W+ = w) for w = 0..n(n+1)/2. Memoized per n.
[[nodiscard]] const std::vector<double>& signed_rank_pmf(std::size_t n);

// Exact distribution of the sum of a random subset of `scores` (each included
// with probability 1/2). Scores must be non-negative integers; mid-ranks are
// handled by passing doubled ranks.
[[nodiscard]] std::vector<double> subset_sum_pmf(std::span<const int> scores);

// Upper (1 - alpha/2) quantile q of the signed-rank statistic
// M = sum sgn * rank (M = 2 W+ - n(n+1)/2): the smallest attainable q with
// P(M <= q) >= 1 - alpha/2.
[[nodiscard]] double rank_statistic_quantile(std::size_t n, double alpha);

// Same for the sign statistic M = (#positive - #negative) / 2 with
// #positive ~ Binomial(n, 1/2).
[[nodiscard]] double sign_statistic_quantile(std::size_t n, double alpha);

[[nodiscard]] double normal_quantile(double p);
[[nodiscard]] double normal_cdf(double z);
[[nodiscard]] double student_t_quantile(double p, double degrees_of_freedom);

}  // namespace tmatch::null_dist
