#include "tmatch/trim_rate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tmatch/error.hpp"

namespace tmatch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kWidthTieTolerance = 1e-9;

}  // namespace

std::size_t max_trim_count(std::size_t n, double lambda_max) {
  if (!(lambda_max >= 0.0 && lambda_max < 0.5)) {
    throw Error(ErrorKind::kInvalidInput, "lambda_max must lie in [0, 0.5)");
  }
  if (n < 2) return 0;
  // The 1e-9 guards n * lambda_max landing just below an integer.
  const auto by_rate = static_cast<std::size_t>(std::floor(static_cast<double>(n) * lambda_max + 1e-9));
  return std::min(by_rate, (n - 2) / 2);
}

TrimRateChoice select_trim_rate(const TrimmedMatchSolver& solver, double alpha0,
                                double lambda_max) {
  const std::size_t n = solver.size();
  if (n < 5) throw Error(ErrorKind::kInvalidInput, "trim rate selection needs at least 5 pairs");
  TrimRateChoice choice;
  choice.alpha0 = alpha0;
  const std::size_t m_max = max_trim_count(n, lambda_max);
  double scale = 1.0;
  for (std::size_t m = 0; m <= m_max; ++m) {
    double width = kInf;
    try {
      const auto ci = solver.interval(m, solver.t_threshold(m, alpha0));
      if (ci.bounded()) {
        width = ci.width();
        scale = std::max({scale, std::abs(ci.lower), std::abs(ci.upper)});
      }
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kDegenerateInterval && e.kind() != ErrorKind::kNoRoot) throw;
    }
    choice.ci_width_by_m.emplace_back(m, width);
  }

  const double best = std::min_element(choice.ci_width_by_m.begin(), choice.ci_width_by_m.end(),
                                       [](const auto& a, const auto& b) {
                                         return a.second < b.second;
                                       })->second;
  if (!std::isfinite(best)) {
    throw Error(ErrorKind::kSelectionFailed,
                "no trim count gives a bounded interval; inspect the data for pairs with "
                "near-zero spend deltas");
  }
  // The absolute term keeps widths that are zero up to rounding tied.
  const double tol = kWidthTieTolerance * best + 1e-12 * scale;
  for (const auto& [m, width] : choice.ci_width_by_m) {
    if (width <= best + tol) {
      choice.m_hat = m;
      break;
    }
  }
  choice.lambda_hat = static_cast<double>(choice.m_hat) / static_cast<double>(n);
  return choice;
}

TrimRateChoice select_trim_rate(std::span<const PairedDifference> diffs, double alpha0,
                                double lambda_max) {
  return select_trim_rate(TrimmedMatchSolver(diffs), alpha0, lambda_max);
}

AutoTrimFit fit_with_auto_trim(const TrimmedMatchSolver& solver, double alpha, double alpha0,
                               double lambda_max) {
  auto choice = select_trim_rate(solver, alpha0, lambda_max);
  auto fit = solver.fit(choice.m_hat, solver.t_threshold(choice.m_hat, alpha));
  return {std::move(choice), std::move(fit)};
}

EstimateReport estimate_with_auto_trim(std::span<const PairedDifference> diffs, double alpha,
                                       double lambda_max, std::uint64_t tie_seed) {
  const TrimmedMatchSolver solver(diffs, tie_seed);
  auto result = fit_with_auto_trim(solver, alpha, kDefaultAlpha0, lambda_max);
  EstimateReport report;
  report.method = Method::kTrimmedMatch;
  report.point = result.fit.estimate.point;
  report.interval = result.fit.interval;
  report.confidence = 1.0 - alpha;
  report.trim_rate = result.choice.lambda_hat;
  report.trim_count = result.choice.m_hat;
  report.untrimmed = std::move(result.fit.estimate.untrimmed);
  return report;
}

}  // namespace tmatch
