#include "tmatch/paired_data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "tmatch/error.hpp"
#include "tmatch/null_distribution.hpp"

namespace tmatch {
namespace {

double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

bool has_x_ties(std::span<const PairedDifference> diffs) {
  std::vector<double> xs(diffs.size());
  std::transform(diffs.begin(), diffs.end(), xs.begin(), [](const auto& d) { return d.x; });
  std::sort(xs.begin(), xs.end());
  return std::adjacent_find(xs.begin(), xs.end()) != xs.end();
}

bool has_crossing_ties(std::span<const PairedDifference> diffs) {
  const std::size_t n = diffs.size();
  std::vector<double> thetas;
  thetas.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = diffs[j].x - diffs[i].x;
      if (dx != 0.0) thetas.push_back((diffs[j].y - diffs[i].y) / dx);
    }
  }
  std::sort(thetas.begin(), thetas.end());
  return std::adjacent_find(thetas.begin(), thetas.end()) != thetas.end();
}

}  // namespace

std::vector<PairedDifference> compute_differences(std::span<const GeoPairOutcome> outcomes) {
  std::vector<PairedDifference> out;
  out.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    if (o.assignment != 1 && o.assignment != -1) {
      throw Error(ErrorKind::kInvalidInput,
                  "pair '" + o.pair_id + "': assignment must be +1 or -1");
    }
    for (double v : {o.spend_first, o.response_first, o.spend_second, o.response_second}) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kInvalidInput, "pair '" + o.pair_id + "': non-finite value");
      }
    }
    const double a = static_cast<double>(o.assignment);
    out.push_back({(o.spend_first - o.spend_second) * a,
                   (o.response_first - o.response_second) * a});
  }
  return out;
}

void residuals_into(std::span<const PairedDifference> diffs, double theta,
                    std::vector<double>& out) {
  out.resize(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) out[i] = diffs[i].y - theta * diffs[i].x;
}

ResidualVector residuals(std::span<const PairedDifference> diffs, double theta) {
  ResidualVector r;
  r.theta = theta;
  residuals_into(diffs, theta, r.values);
  return r;
}

bool is_tie_free(std::span<const PairedDifference> diffs) {
  return !has_x_ties(diffs) && !has_crossing_ties(diffs);
}

std::vector<PairedDifference> perturb_ties(std::span<const PairedDifference> diffs,
                                           double relative_scale, std::uint64_t seed) {
  if (!(relative_scale > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "perturb_ties: relative_scale must be positive");
  }
  std::vector<PairedDifference> out(diffs.begin(), diffs.end());
  const bool x_ties = has_x_ties(out);
  if (!x_ties && !has_crossing_ties(out)) return out;

  const auto [lo, hi] = std::minmax_element(
      out.begin(), out.end(), [](const auto& a, const auto& b) { return a.x < b.x; });
  const double range = hi->x - lo->x;
  if (!(range > 0.0)) {
    throw Error(ErrorKind::kDegenerateData, "perturb_ties: all spend deltas are identical");
  }

  std::mt19937_64 gen(seed);
  double scale = relative_scale * range;
  if (x_ties) {
    std::vector<std::size_t> idx(out.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return out[a].x < out[b].x; });
    for (std::size_t k = 1; k < idx.size(); ++k) {
      if (diffs[idx[k]].x == diffs[idx[k - 1]].x) {
        out[idx[k]].x += scale * (0.5 + 0.5 * unit_uniform(gen));
      }
    }
  }
  // Shifting only the duplicates can leave collinear crossings tied; jitter
  // every x and, failing that, grow the jitter.
  for (int attempt = 0; attempt < 8 && !is_tie_free(out); ++attempt) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i].x = diffs[i].x + scale * (2.0 * unit_uniform(gen) - 1.0);
    }
    scale *= 10.0;
  }
  if (!is_tie_free(out)) {
    throw Error(ErrorKind::kDegenerateData, "perturb_ties: could not separate ties");
  }
  return out;
}

double sample_kurtosis(std::span<const double> values) {
  if (values.size() < 4) {
    throw Error(ErrorKind::kInvalidInput, "kurtosis needs at least 4 values");
  }
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) {
    throw Error(ErrorKind::kDegenerateData, "kurtosis undefined for zero variance");
  }
  return m4 / (m2 * m2);
}

double residual_symmetry_test(std::span<const double> residuals) {
  if (residuals.size() < 5) {
    throw Error(ErrorKind::kInvalidInput, "symmetry test needs at least 5 residuals");
  }
  std::vector<double> nonzero;
  nonzero.reserve(residuals.size());
  for (double r : residuals) {
    if (!std::isfinite(r)) throw Error(ErrorKind::kInvalidInput, "non-finite residual");
    if (r != 0.0) nonzero.push_back(r);
  }
  const std::size_t n = nonzero.size();
  if (n == 0) return 1.0;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(nonzero[a]) < std::abs(nonzero[b]);
  });
  // Doubled mid-ranks stay integral: 2 * midrank = first + last (1-based).
  std::vector<int> doubled(n);
  for (std::size_t k = 0; k < n;) {
    std::size_t last = k;
    while (last + 1 < n &&
           std::abs(nonzero[order[last + 1]]) == std::abs(nonzero[order[k]])) {
      ++last;
    }
    const int twice_mid = static_cast<int>(k + 1 + last + 1);
    for (std::size_t t = k; t <= last; ++t) doubled[order[t]] = twice_mid;
    k = last + 1;
  }
  long w_twice = 0;
  long total_twice = 0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total_twice += doubled[i];
    sum_sq += 0.25 * doubled[i] * doubled[i];
    if (nonzero[i] > 0.0) w_twice += doubled[i];
  }

  double p = 1.0;
  if (n <= null_dist::kExactRankLimit) {
    const auto pmf = null_dist::subset_sum_pmf(doubled);
    double lower = 0.0;
    double upper = 0.0;
    for (long w = 0; w < static_cast<long>(pmf.size()); ++w) {
      if (w <= w_twice) lower += pmf[static_cast<std::size_t>(w)];
      if (w >= w_twice) upper += pmf[static_cast<std::size_t>(w)];
    }
    p = 2.0 * std::min(lower, upper);
  } else {
    const double mean = 0.25 * static_cast<double>(total_twice);
    const double sd = std::sqrt(sum_sq / 4.0);
    const double w = 0.5 * static_cast<double>(w_twice);
    const double z = std::max(0.0, std::abs(w - mean) - 0.5) / sd;
    p = 2.0 * (1.0 - null_dist::normal_cdf(z));
  }
  return std::min(1.0, p);
}

}  // namespace tmatch
