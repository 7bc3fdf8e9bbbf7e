#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tmatch::oracle {
namespace {

std::vector<double> residual_values(std::span<const PairedDifference> diffs, double theta) {
  std::vector<double> e;
  for (const auto& d : diffs) e.push_back(d.y - theta * d.x);
  return e;
}

}  // namespace

std::vector<double> brute_force_roots(std::span<const PairedDifference> diffs, std::size_t m) {
  const std::size_t n = diffs.size();
  std::vector<double> cuts;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (diffs[i].x != diffs[j].x) {
        cuts.push_back((diffs[j].y - diffs[i].y) / (diffs[j].x - diffs[i].x));
      }
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> bounds{-inf};
  bounds.insert(bounds.end(), cuts.begin(), cuts.end());
  bounds.push_back(inf);

  std::vector<double> roots;
  for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
    const double lo = bounds[k];
    const double hi = bounds[k + 1];
    double mid = 0.0;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      mid = 0.5 * (lo + hi);
    } else if (std::isfinite(hi)) {
      mid = hi - std::max(1.0, std::abs(hi));
    } else if (std::isfinite(lo)) {
      mid = lo + std::max(1.0, std::abs(lo));
    }
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return diffs[a].y - mid * diffs[a].x < diffs[b].y - mid * diffs[b].x;
    });
    double sy = 0.0;
    double sx = 0.0;
    for (std::size_t r = m; r < n - m; ++r) {
      sy += diffs[idx[r]].y;
      sx += diffs[idx[r]].x;
    }
    if (sx == 0.0) continue;
    const double root = sy / sx;
    double scale = 1.0;
    if (std::isfinite(lo)) scale = std::max(scale, std::abs(lo));
    if (std::isfinite(hi)) scale = std::max(scale, std::abs(hi));
    if (root >= lo - 1e-12 * scale && root <= hi + 1e-12 * scale) roots.push_back(root);
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> out;
  for (double r : roots) {
    if (!out.empty() && std::abs(r - out.back()) <= 1e-11 * std::max(1.0, std::abs(out.back()))) {
      continue;
    }
    out.push_back(r);
  }
  return out;
}

double trimmed_mean(std::vector<double> e, std::size_t m) {
  std::sort(e.begin(), e.end());
  double s = 0.0;
  for (std::size_t i = m; i < e.size() - m; ++i) s += e[i];
  return s / static_cast<double>(e.size() - 2 * m);
}

double winsorized_variance(std::vector<double> e, std::size_t m) {
  std::sort(e.begin(), e.end());
  const std::size_t n = e.size();
  std::vector<double> w(e);
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = e[m];
    w[n - 1 - i] = e[n - m - 1];
  }
  double mean = 0.0;
  for (double v : w) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : w) ss += v * v;
  return (ss - static_cast<double>(n) * mean * mean) / static_cast<double>(n - 2 * m);
}

double studentized(std::vector<double> e, std::size_t m) {
  const double mean = trimmed_mean(e, m);
  const double var = winsorized_variance(e, m);
  const double k = static_cast<double>(e.size() - 2 * m);
  return mean / (std::sqrt(var) / std::sqrt(k - 1.0));
}

std::optional<std::pair<double, double>> grid_interval(std::span<const PairedDifference> diffs,
                                                       std::size_t m, double c, double from,
                                                       double to, double step) {
  std::optional<std::pair<double, double>> out;
  const auto steps = static_cast<long>(std::floor((to - from) / step));
  for (long k = 0; k <= steps; ++k) {
    const double theta = from + static_cast<double>(k) * step;
    const double t = studentized(residual_values(diffs, theta), m);
    if (std::abs(t) <= c) {
      if (!out) out = std::make_pair(theta, theta);
      out->second = theta;
    }
  }
  return out;
}

double brute_force_test_statistic(std::span<const PairedDifference> diffs, double theta,
                                  bool rank) {
  auto sgn = [](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); };
  double total = 0.0;
  if (!rank) {
    for (const auto& d : diffs) total += 0.5 * sgn(d.y - theta * d.x);
    return total;
  }
  // Walsh-average form of the signed-rank statistic (valid without ties).
  std::vector<double> e;
  for (const auto& d : diffs) {
    if (d.x != 0.0 || d.y != 0.0) e.push_back(d.y - theta * d.x);
  }
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i; j < e.size(); ++j) total += sgn(e[i] + e[j]);
  }
  return total;
}

std::vector<PairedDifference> random_diffs(std::size_t n, std::mt19937_64& gen, Shape shape,
                                           double theta) {
  std::uniform_real_distribution<double> spend(0.5, 3.0);
  std::uniform_real_distribution<double> mixed(-3.0, 3.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::cauchy_distribution<double> cauchy(0.0, 1.0);
  std::vector<PairedDifference> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = shape == Shape::kMixedSign ? mixed(gen) : spend(gen);
    const double noise = shape == Shape::kHeavy ? cauchy(gen) : normal(gen);
    out.push_back({x, theta * x + noise});
  }
  return out;
}

}  // namespace tmatch::oracle
