#include "tmatch/null_distribution.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <shared_mutex>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "tmatch/error.hpp"

namespace tmatch::null_dist {
namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorKind::kInvalidInput, "alpha must lie in (0, 1)");
  }
}

class RankPmfCache {
 public:
  const std::vector<double>& get(std::size_t n) {
    {
      std::shared_lock lock(mutex_);
      if (auto it = tables_.find(n); it != tables_.end()) return *it->second;
    }
    std::vector<int> ranks(n);
    std::iota(ranks.begin(), ranks.end(), 1);
    auto table = std::make_unique<std::vector<double>>(subset_sum_pmf(ranks));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = tables_.try_emplace(n, std::move(table));
    return *it->second;
  }

 private:
  std::shared_mutex mutex_;
  std::map<std::size_t, std::unique_ptr<std::vector<double>>> tables_;
};

RankPmfCache& rank_cache() {
  static RankPmfCache cache;
  return cache;
}

}  // namespace

std::vector<double> subset_sum_pmf(std::span<const int> scores) {
  long total = 0;
  for (int s : scores) {
    if (s < 0) throw Error(ErrorKind::kInvalidInput, "subset_sum_pmf: negative score");
    total += s;
  }
  std::vector<double> pmf(static_cast<std::size_t>(total) + 1, 0.0);
  pmf[0] = 1.0;
  long reach = 0;
  for (int s : scores) {
    // Each score enters with probability 1/2: p'(w) = (p(w) + p(w - s)) / 2.
    for (long w = reach + s; w >= 0; --w) {
      const double keep = pmf[static_cast<std::size_t>(w)];
      const double add = w >= s ? pmf[static_cast<std::size_t>(w - s)] : 0.0;
      pmf[static_cast<std::size_t>(w)] = 0.5 * (keep + add);
    }
    reach += s;
  }
  return pmf;
}

const std::vector<double>& signed_rank_pmf(std::size_t n) { return rank_cache().get(n); }

double rank_statistic_quantile(std::size_t n, double alpha) {
  check_alpha(alpha);
  if (n == 0) return 0.0;
  const double total = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
  const double target = 1.0 - alpha / 2.0;
  double w_quantile = 0.0;
  if (n <= kExactRankLimit) {
    const auto& pmf = signed_rank_pmf(n);
    double cdf = 0.0;
    std::size_t w = 0;
    for (; w < pmf.size(); ++w) {
      cdf += pmf[w];
      // Relative slack absorbs rounding in the accumulated cdf.
      if (cdf >= target * (1.0 - 1e-12)) break;
    }
    w_quantile = static_cast<double>(std::min(w, pmf.size() - 1));
  } else {
    const double mean = total / 2.0;
    const double sd = std::sqrt(static_cast<double>(n) * (n + 1) * (2.0 * n + 1) / 24.0);
    // Smallest integer w with Phi((w + 0.5 - mean) / sd) >= target.
    w_quantile = std::ceil(mean + normal_quantile(target) * sd - 0.5);
    w_quantile = std::clamp(w_quantile, 0.0, total);
  }
  return 2.0 * w_quantile - total;
}

double sign_statistic_quantile(std::size_t n, double alpha) {
  check_alpha(alpha);
  if (n == 0) return 0.0;
  const double target = 1.0 - alpha / 2.0;
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  double cdf = 0.0;
  std::size_t b = 0;
  for (; b <= n; ++b) {
    const double log_choose = lg_n1 - std::lgamma(static_cast<double>(b) + 1.0) -
                              std::lgamma(static_cast<double>(n - b) + 1.0);
    cdf += std::exp(log_choose + log_half_n);
    if (cdf >= target * (1.0 - 1e-12)) break;
  }
  b = std::min(b, n);
  return static_cast<double>(b) - static_cast<double>(n) / 2.0;
}

double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double normal_cdf(double z) {
  return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

double student_t_quantile(double p, double degrees_of_freedom) {
  if (!(degrees_of_freedom > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "t quantile needs positive degrees of freedom");
  }
  return boost::math::quantile(boost::math::students_t_distribution<double>(degrees_of_freedom),
                               p);
}

}  // namespace tmatch::null_dist
