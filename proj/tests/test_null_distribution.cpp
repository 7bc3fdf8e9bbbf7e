#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "tmatch/error.hpp"
#include "tmatch/null_distribution.hpp"

using namespace tmatch;
using namespace tmatch::null_dist;

TEST(SignedRankPmf, SumsToOneAndSymmetric) {
  for (std::size_t n = 1; n <= kExactRankLimit; ++n) {
    const auto& pmf = signed_rank_pmf(n);
    ASSERT_EQ(pmf.size(), n * (n + 1) / 2 + 1);
    EXPECT_NEAR(std::accumulate(pmf.begin(), pmf.end(), 0.0), 1.0, 1e-12);
    for (std::size_t w = 0; w < pmf.size(); ++w) {
      EXPECT_NEAR(pmf[w], pmf[pmf.size() - 1 - w], 1e-15);
    }
  }
}

TEST(SignedRankPmf, SmallCaseByHand) {
  // n = 3: subsets of {1,2,3} by sum: 0,1,2,{3,1+2},1+3,2+3,1+2+3.
  const auto& pmf = signed_rank_pmf(3);
  const std::vector<double> want{1, 1, 1, 2, 1, 1, 1};
  for (std::size_t w = 0; w < want.size(); ++w) EXPECT_DOUBLE_EQ(pmf[w], want[w] / 8.0);
}

TEST(SubsetSumPmf, DoubledMidRanks) {
  // Ranks 1.5, 1.5, 3 doubled to 3, 3, 6.
  const auto pmf = subset_sum_pmf(std::vector<int>{3, 3, 6});
  ASSERT_EQ(pmf.size(), 13u);
  EXPECT_DOUBLE_EQ(pmf[0], 1.0 / 8);
  EXPECT_DOUBLE_EQ(pmf[3], 2.0 / 8);
  EXPECT_DOUBLE_EQ(pmf[6], 2.0 / 8);
  EXPECT_DOUBLE_EQ(pmf[9], 2.0 / 8);
  EXPECT_DOUBLE_EQ(pmf[12], 1.0 / 8);
  EXPECT_THROW((void)subset_sum_pmf(std::vector<int>{1, -2}), Error);
}

TEST(RankQuantile, ExactDefinition) {
  for (std::size_t n : {5u, 10u, 20u, 25u}) {
    for (double alpha : {0.01, 0.05, 0.1, 0.5}) {
      const double q = rank_statistic_quantile(n, alpha);
      const double total = static_cast<double>(n * (n + 1) / 2);
      const auto& pmf = signed_rank_pmf(n);
      // P(M <= q) >= 1 - alpha/2 and P(M <= q - 2) < 1 - alpha/2 (M moves in steps of 2).
      auto cdf_at = [&](double m) {
        double c = 0.0;
        for (std::size_t w = 0; w < pmf.size(); ++w) {
          if (2.0 * static_cast<double>(w) - total <= m + 1e-9) c += pmf[w];
        }
        return c;
      };
      EXPECT_GE(cdf_at(q), 1.0 - alpha / 2 - 1e-12);
      EXPECT_LT(cdf_at(q - 2.0), 1.0 - alpha / 2);
    }
  }
}

TEST(RankQuantile, ApproximationIsContinuousAtCutover) {
  const double exact = rank_statistic_quantile(25, 0.1);
  const double approx = rank_statistic_quantile(26, 0.1);
  // Tables list W+ critical value 100 for n = 25 (upper 5%: 325 - 100 = 225).
  EXPECT_NEAR(exact, 2 * 225.0 - 325.0, 4.0);
  EXPECT_GT(approx, exact);
  EXPECT_LT(approx - exact, 12.0);
}

TEST(SignQuantile, Binomial) {
  // n = 10, alpha = 0.1: P(B <= 7) = 0.945 < 0.95 and P(B <= 8) = 0.989.
  EXPECT_DOUBLE_EQ(sign_statistic_quantile(10, 0.1), 8.0 - 5.0);
  // n = 10, alpha = 0.5: P(B <= 6) = 0.828 >= 0.75 and P(B <= 5) = 0.623 < 0.75.
  EXPECT_DOUBLE_EQ(sign_statistic_quantile(10, 0.5), 6.0 - 5.0);
  EXPECT_THROW((void)sign_statistic_quantile(10, 0.0), Error);
}

TEST(ContinuousQuantiles, KnownValues) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-12);
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-12);
  EXPECT_NEAR(student_t_quantile(0.95, 10.0), 1.812461122811676, 1e-10);
  EXPECT_NEAR(student_t_quantile(0.975, 1.0), 12.706204736174698, 1e-8);
  EXPECT_THROW((void)student_t_quantile(0.9, 0.0), Error);
}
