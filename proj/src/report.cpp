#include "tmatch/report.hpp"

#include "tmatch/error.hpp"
#include "tmatch/estimators.hpp"
#include "tmatch/trim_rate.hpp"
#include "tmatch/trimmed_match.hpp"

namespace tmatch {

std::string_view to_string(Method method) {
  switch (method) {
    case Method::kEmpirical:
      return "empirical";
    case Method::kSign:
      return "sign";
    case Method::kRank:
      return "rank";
    case Method::kTrimmedMatch:
      return "trimmed_match";
  }
  return "unknown";
}

EstimateReport estimate_report(std::span<const PairedDifference> diffs, Method method,
                               double alpha, const TrimOption& trim) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "confidence must lie in (0, 1)");
  }
  EstimateReport report;
  report.method = method;
  report.confidence = 1.0 - alpha;
  switch (method) {
    case Method::kEmpirical: {
      if (diffs.size() < 2) {
        throw Error(ErrorKind::kInvalidInput, "empirical interval needs at least 2 pairs");
      }
      report.point = empirical_estimate(diffs);
      const TrimmedMatchSolver solver(diffs, trim.seed);
      report.interval = solver.interval(0, solver.t_threshold(0, alpha));
      break;
    }
    case Method::kSign:
    case Method::kRank: {
      const auto kind = method == Method::kSign ? TestStatisticKind::kSign : TestStatisticKind::kRank;
      const auto inference = test_based_inference(diffs, kind, alpha);
      report.point = inference.estimate.point;
      report.interval = inference.interval;
      break;
    }
    case Method::kTrimmedMatch: {
      if (trim.automatic) {
        auto auto_report = estimate_with_auto_trim(diffs, alpha, trim.lambda_max, trim.seed);
        auto_report.confidence = report.confidence;
        return auto_report;
      }
      const auto spec = TrimSpec::from_rate(diffs.size(), trim.lambda);
      if (spec.kept() < 2) {
        throw Error(ErrorKind::kInvalidInput, "trim rate leaves fewer than 2 pairs for an interval");
      }
      const TrimmedMatchSolver solver(diffs, trim.seed);
      auto fit = solver.fit(spec.m, solver.t_threshold(spec.m, alpha));
      report.point = fit.estimate.point;
      report.interval = fit.interval;
      report.trim_rate = trim.lambda;
      report.trim_count = spec.m;
      report.untrimmed = std::move(fit.estimate.untrimmed);
      break;
    }
  }
  return report;
}

}  // namespace tmatch
