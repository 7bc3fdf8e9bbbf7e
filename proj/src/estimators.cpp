#include "tmatch/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "tmatch/error.hpp"
#include "tmatch/null_distribution.hpp"

namespace tmatch {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sgn(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

struct Jump {
  double at;
  double delta;
};

std::vector<PairedDifference> informative_pairs(std::span<const PairedDifference> diffs) {
  std::vector<PairedDifference> kept;
  kept.reserve(diffs.size());
  for (const auto& d : diffs) {
    if (!std::isfinite(d.x) || !std::isfinite(d.y)) {
      throw Error(ErrorKind::kInvalidInput, "non-finite paired difference");
    }
    if (d.x != 0.0 || d.y != 0.0) kept.push_back(d);
  }
  return kept;
}

// A term sgn(Y - theta X) weighted by w: starts at w sgn(X) and drops by
// 2 w sgn(X) at Y / X. X == 0 terms are constant.
void add_term(double x, double y, double weight, double& start, std::vector<Jump>& jumps) {
  if (x == 0.0) {
    start += weight * sgn(y);
    return;
  }
  start += weight * sgn(x);
  jumps.push_back({y / x, -2.0 * weight * sgn(x)});
}

}  // namespace

std::string_view to_string(TestStatisticKind kind) {
  return kind == TestStatisticKind::kSign ? "sign" : "rank";
}

double empirical_estimate(std::span<const PairedDifference> diffs) {
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& d : diffs) {
    sx += d.x;
    sy += d.y;
  }
  if (sx == 0.0) {
    throw Error(ErrorKind::kUnidentifiedRatio, "empirical estimate: spend deltas sum to zero");
  }
  return sy / sx;
}

double sign_statistic(std::span<const PairedDifference> diffs, double theta) {
  double m = 0.0;
  for (const auto& d : diffs) m += 0.5 * sgn(d.y - theta * d.x);
  return m;
}

double rank_statistic(std::span<const PairedDifference> diffs, double theta) {
  std::vector<double> e;
  e.reserve(diffs.size());
  for (const auto& d : diffs) {
    const double r = d.y - theta * d.x;
    if (r != 0.0) e.push_back(r);
  }
  std::sort(e.begin(), e.end(),
            [](double a, double b) { return std::abs(a) < std::abs(b); });
  double m = 0.0;
  for (std::size_t k = 0; k < e.size();) {
    std::size_t last = k;
    while (last + 1 < e.size() && std::abs(e[last + 1]) == std::abs(e[k])) ++last;
    const double mid_rank = 0.5 * static_cast<double>(k + 1 + last + 1);
    for (std::size_t t = k; t <= last; ++t) m += sgn(e[t]) * mid_rank;
    k = last + 1;
  }
  return m;
}

double test_statistic(std::span<const PairedDifference> diffs, double theta,
                      TestStatisticKind kind) {
  return kind == TestStatisticKind::kSign ? sign_statistic(diffs, theta)
                                          : rank_statistic(diffs, theta);
}

StatisticProfile statistic_profile(std::span<const PairedDifference> diffs,
                                   TestStatisticKind kind) {
  const auto pairs = informative_pairs(diffs);
  const std::size_t n = pairs.size();
  double start = 0.0;
  std::vector<Jump> jumps;
  if (kind == TestStatisticKind::kSign) {
    jumps.reserve(n);
    for (const auto& d : pairs) add_term(d.x, d.y, 0.5, start, jumps);
  } else {
    jumps.reserve(n * (n + 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        add_term(pairs[i].x + pairs[j].x, pairs[i].y + pairs[j].y, 1.0, start, jumps);
      }
    }
  }
  std::sort(jumps.begin(), jumps.end(), [](const Jump& a, const Jump& b) { return a.at < b.at; });

  StatisticProfile profile;
  profile.effective_n = n;
  profile.values.push_back(start);
  double current = start;
  for (std::size_t k = 0; k < jumps.size();) {
    double delta = 0.0;
    std::size_t last = k;
    for (; last < jumps.size() && jumps[last].at == jumps[k].at; ++last) delta += jumps[last].delta;
    if (delta != 0.0) {
      current += delta;
      profile.breakpoints.push_back(jumps[k].at);
      profile.values.push_back(current);
    }
    k = last;
  }
  return profile;
}

bool TestBasedEstimate::bounded() const {
  return std::isfinite(argmin_lower) && std::isfinite(argmin_upper);
}

namespace {

// The profile as alternating pieces: open interval k, then breakpoint k,
// whose value is the mean of the two neighbouring interval values.
struct Piece {
  double lower;
  double upper;
  double value;
};

std::vector<Piece> pieces(const StatisticProfile& profile) {
  const auto& b = profile.breakpoints;
  const auto& v = profile.values;
  std::vector<Piece> out;
  out.reserve(2 * v.size());
  for (std::size_t k = 0; k < v.size(); ++k) {
    out.push_back({k == 0 ? -kInf : b[k - 1], k == b.size() ? kInf : b[k], v[k]});
    if (k < b.size()) out.push_back({b[k], b[k], 0.5 * (v[k] + v[k + 1])});
  }
  return out;
}

// Hull of the pieces with |value| <= level, or nothing.
std::optional<ConfidenceInterval> level_hull(const std::vector<Piece>& ps, double level) {
  std::optional<ConfidenceInterval> out;
  for (const auto& p : ps) {
    if (std::abs(p.value) > level) continue;
    if (!out) out = ConfidenceInterval{p.lower, p.upper};
    out->upper = p.upper;
  }
  return out;
}

double min_abs(const std::vector<Piece>& ps) {
  double best = kInf;
  for (const auto& p : ps) best = std::min(best, std::abs(p.value));
  return best;
}

}  // namespace

TestBasedEstimate estimate_from_profile(const StatisticProfile& profile) {
  const auto ps = pieces(profile);
  const double best = min_abs(ps);
  const auto hull = level_hull(ps, best);
  TestBasedEstimate est;
  est.min_abs_statistic = best;
  est.argmin_lower = hull->lower;
  est.argmin_upper = hull->upper;
  if (!std::isfinite(est.argmin_lower) && !std::isfinite(est.argmin_upper)) {
    throw Error(ErrorKind::kUnidentifiedRatio,
                "test-based estimate: argmin of |M| is unbounded on both sides");
  }
  if (!std::isfinite(est.argmin_lower)) {
    est.point = -kInf;
  } else if (!std::isfinite(est.argmin_upper)) {
    est.point = kInf;
  } else {
    est.point = 0.5 * (est.argmin_lower + est.argmin_upper);
  }
  return est;
}

ConfidenceInterval interval_from_profile(const StatisticProfile& profile, double threshold) {
  const auto ps = pieces(profile);
  return *level_hull(ps, std::max(threshold, min_abs(ps)));
}

namespace {

double null_quantile(const StatisticProfile& profile, TestStatisticKind kind, double alpha) {
  return kind == TestStatisticKind::kSign
             ? null_dist::sign_statistic_quantile(profile.effective_n, alpha)
             : null_dist::rank_statistic_quantile(profile.effective_n, alpha);
}

void require_pairs(std::span<const PairedDifference> diffs) {
  if (diffs.size() < 2) {
    throw Error(ErrorKind::kInvalidInput, "test-based estimation needs at least 2 pairs");
  }
}

}  // namespace

TestBasedEstimate test_based_estimate(std::span<const PairedDifference> diffs,
                                      TestStatisticKind kind) {
  require_pairs(diffs);
  return estimate_from_profile(statistic_profile(diffs, kind));
}

ConfidenceInterval test_based_ci(std::span<const PairedDifference> diffs, TestStatisticKind kind,
                                 double alpha) {
  require_pairs(diffs);
  const auto profile = statistic_profile(diffs, kind);
  return interval_from_profile(profile, null_quantile(profile, kind, alpha));
}

TestBasedInference test_based_inference(std::span<const PairedDifference> diffs,
                                        TestStatisticKind kind, double alpha) {
  require_pairs(diffs);
  const auto profile = statistic_profile(diffs, kind);
  return {estimate_from_profile(profile),
          interval_from_profile(profile, null_quantile(profile, kind, alpha))};
}

}  // namespace tmatch
