#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tmatch/interval.hpp"
#include "tmatch/paired_data.hpp"

namespace tmatch {

enum class Method { kEmpirical, kSign, kRank, kTrimmedMatch };

[[nodiscard]] std::string_view to_string(Method method);

// One estimator's answer on one dataset. `trim_rate`, `trim_count` and
// `untrimmed` are set only for Trimmed Match; `untrimmed` lists input
// indices of the pairs kept at the estimate.
struct EstimateReport {
  Method method = Method::kEmpirical;
  double point = 0.0;
  ConfidenceInterval interval;
  double confidence = 0.9;
  std::optional<double> trim_rate;
  std::optional<std::size_t> trim_count;
  std::vector<std::size_t> untrimmed;
};

// Trimmed Match trim choice: data-driven (`automatic`) or a fixed rate.
struct TrimOption {
  bool automatic = true;
  double lambda = 0.0;
  double lambda_max = 0.25;
  std::uint64_t seed = 0;  // jitter seed for tied spend differences
};

// Point estimate and (1 - alpha) interval for one method. The empirical
// interval is the untrimmed studentized-mean interval (t with n - 1 degrees
// of freedom); sign and rank invert their tests; Trimmed Match uses `trim`.
[[nodiscard]] EstimateReport estimate_report(std::span<const PairedDifference> diffs,
                                             Method method, double alpha,
                                             const TrimOption& trim = {});

}  // namespace tmatch
