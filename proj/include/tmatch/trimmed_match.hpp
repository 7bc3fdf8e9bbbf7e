#pragma once

// Trimmed Match: the ratio estimator that solves "trimmed mean of the
// residuals y_i - theta x_i equals zero", with roots found by sweeping the
// pairwise crossing points of the residual lines, ties among multiple roots
// broken by the symmetric-deviation statistic, and a confidence interval from
// inverting the studentized trimmed mean.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tmatch/interval.hpp"
#include "tmatch/paired_data.hpp"

namespace tmatch {

// Trim rate lambda and the per-tail trim count m = ceil(n * lambda).
struct TrimSpec {
  double lambda = 0.0;
  std::size_t m = 0;
  std::size_t n = 0;

  // Throws Error(kInvalidInput) unless lambda in [0, 0.5) and n - 2m >= 1.
  // n * lambda is rounded up after a 1e-9 allowance, so from_rate(n, m / n)
  // gives back m.
  [[nodiscard]] static TrimSpec from_rate(std::size_t n, double lambda);
  [[nodiscard]] static TrimSpec from_count(std::size_t n, std::size_t m);

  [[nodiscard]] std::size_t kept() const { return n - 2 * m; }
};

// Pairs i, j (input indices) with x_i < x_j. The residual of i is below the
// residual of j exactly when theta < theta_ij = (y_j - y_i) / (x_j - x_i).
struct CrossingPoint {
  std::size_t i = 0;
  std::size_t j = 0;
  double theta = 0.0;
};

// All n(n-1)/2 crossings sorted by theta. Throws Error(kDegenerateData) on
// duplicate x values; run perturb_ties first.
[[nodiscard]] std::vector<CrossingPoint> candidate_crossings(
    std::span<const PairedDifference> diffs);

// Mean of the order statistics m+1 .. n-m of the residuals at theta.
[[nodiscard]] double trimmed_mean_residual(std::span<const PairedDifference> diffs, double theta,
                                           const TrimSpec& spec);

// (1/(n-2m)) * sum_{i=m+1}^{n-m} |e_(i) + e_(n-i+1)| at theta.
[[nodiscard]] double symmetry_deviation(std::span<const PairedDifference> diffs, double theta,
                                        const TrimSpec& spec);

struct WinsorizedMoments {
  double mean = 0.0;
  double variance = 0.0;
};

// Winsorized mean of the residuals and the winsorized variance estimate of
// the trimmed mean (normalized by n - 2m). The variance is accumulated from
// centred terms, so it is never negative.
[[nodiscard]] WinsorizedMoments winsorized_moments(std::span<const PairedDifference> diffs,
                                                   double theta, const TrimSpec& spec);

// Studentized trimmed mean T = mean_trim / (sigma_w / sqrt(n - 2m - 1)).
// A zero winsorized spread gives 0 when the trimmed mean is 0 and +-inf
// otherwise.
[[nodiscard]] double studentized_statistic(std::span<const PairedDifference> diffs, double theta,
                                           const TrimSpec& spec);
[[nodiscard]] double studentized_from_residuals(std::span<const double> residuals, std::size_t m);

// Roots of the trimmed-mean equation. `untrimmed[k]` lists the input indices
// of the n - 2m pairs kept at roots[k]; roots[k] equals the ratio of their
// y-sum to their x-sum.
struct RootSet {
  std::vector<double> roots;
  std::vector<double> d_values;
  std::vector<std::vector<std::size_t>> untrimmed;
};

struct TrimmedMatchEstimate {
  double point = 0.0;
  double d_value = 0.0;
  std::vector<std::size_t> untrimmed;  // input indices, ascending
};

enum class ThresholdMethod { kStudentT, kRandomization };

struct IntervalOptions {
  ThresholdMethod method = ThresholdMethod::kStudentT;
  std::size_t resamples = 10000;  // randomization only
  std::uint64_t seed = 0;         // randomization only
  unsigned workers = 1;           // randomization only; results do not depend on it
};

struct TrimmedMatchFit {
  TrimmedMatchEstimate estimate;
  ConfidenceInterval interval;
  double threshold = 0.0;
};

// Precomputed crossing sweep for one dataset, shared by every trim count.
//
// The residual lines are sorted by x (ties in x are jittered first) and their
// crossings by theta; walking the crossings in order turns the ranking of
// the residuals into a sequence of adjacent swaps that does not depend on m.
// For a given m only swaps touching the trim boundaries or the winsorizing
// order statistics change anything, so each trim count is solved from its own
// short event list: the kept-pair sums are affine in theta between events,
// which makes every root a ratio of sums and every confidence bound the root
// of a quadratic.
class TrimmedMatchSolver {
 public:
  explicit TrimmedMatchSolver(std::span<const PairedDifference> diffs,
                              std::uint64_t tie_seed = 0);

  [[nodiscard]] std::size_t size() const { return n_; }
  // True when the data needed tie-breaking jitter before the sweep.
  [[nodiscard]] bool perturbed() const { return perturbed_; }

  // Throws Error(kInvalidInput) unless n - 2m >= 1.
  [[nodiscard]] RootSet roots(std::size_t m) const;

  // Root with the smallest symmetric deviation; near-equal deviations
  // (within 1e-12) go to the smaller |theta|, then the smaller theta.
  // Throws Error(kNoRoot) when the equation has no root.
  [[nodiscard]] TrimmedMatchEstimate estimate(std::size_t m) const;

  // Hull of {theta : |T(theta)| <= threshold}, always including every root.
  // Needs n - 2m - 1 >= 1. Throws Error(kDegenerateInterval) when the
  // acceptance region is empty.
  [[nodiscard]] ConfidenceInterval interval(std::size_t m, double threshold) const;

  [[nodiscard]] TrimmedMatchFit fit(std::size_t m, double threshold) const;

  // t quantile with n - 2m - 1 degrees of freedom for a (1 - alpha) interval.
  [[nodiscard]] double t_threshold(std::size_t m, double alpha) const;

  // (1 - alpha) quantile of |T| over random sign flips of the residuals at the
  // point estimate.
  [[nodiscard]] double randomization_threshold(std::size_t m, double point, double alpha,
                                               std::size_t resamples, std::uint64_t seed,
                                               unsigned workers) const;

 private:
  struct Event {
    double theta;
    std::uint32_t position;  // swap of ranks position and position + 1
    std::uint32_t lower;     // element ranked at `position` before the swap
    std::uint32_t upper;     // element ranked at `position + 1` before the swap
  };
  struct State;
  struct Snapshot;

  bool build_events();
  template <class Visit>
  void for_each_state(std::size_t m, Visit&& visit) const;
  void check_count(std::size_t m, bool need_interval) const;
  // One sweep: roots always, plus the ordinals of states whose acceptance
  // region may be non-empty when `candidates` is given.
  RootSet collect(std::size_t m, double threshold, std::vector<std::size_t>* candidates) const;
  std::vector<Snapshot> snapshots(std::size_t m, const std::vector<std::size_t>& ordinals) const;
  TrimmedMatchEstimate choose(std::size_t m, const RootSet& roots) const;
  ConfidenceInterval hull(std::size_t m, double threshold, const RootSet& roots,
                          const std::vector<std::size_t>& candidates) const;

  std::size_t n_ = 0;
  bool perturbed_ = false;
  // Elements are indexed by rank of x; `input_index_` maps back to the caller.
  std::vector<std::size_t> input_index_;
  std::vector<std::size_t> element_of_;  // inverse of input_index_
  std::vector<double> x_;  // swept values (possibly jittered)
  std::vector<double> y_;
  std::vector<double> x_orig_;  // caller's values, same element order
  std::vector<double> y_orig_;
  std::vector<Event> events_;
  std::vector<std::vector<std::uint32_t>> events_at_;  // per swap position
};

[[nodiscard]] RootSet solve_trimmed_mean_equation(std::span<const PairedDifference> diffs,
                                                  const TrimSpec& spec);

[[nodiscard]] TrimmedMatchEstimate point_estimate(std::span<const PairedDifference> diffs,
                                                  const TrimSpec& spec);

[[nodiscard]] ConfidenceInterval confidence_interval(std::span<const PairedDifference> diffs,
                                                     const TrimSpec& spec, double alpha,
                                                     const IntervalOptions& options = {});

}  // namespace tmatch
