#include <gtest/gtest.h>

#include <cmath>

#include "wobble/error.hpp"
#include "wobble/philox.hpp"
#include "wobble/stats.hpp"

using namespace wobble;

namespace {

double pair_count_auc(const std::vector<double>& s, const std::vector<bool>& truth) {
  double num = 0, pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!truth[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (truth[j]) continue;
      pairs += 1;
      if (s[i] < s[j]) num += 1;
      else if (s[i] == s[j]) num += 0.5;
    }
  }
  return num / pairs;
}

}  // namespace

TEST(Roc, PerfectSeparation) {
  const auto r = roc_auc(std::vector<double>{0.001, 0.01, 0.5, 0.9}, {true, true, false, false});
  EXPECT_EQ(r.auc, 1.0);
  EXPECT_EQ(r.points.front().fpr, 0.0);
  EXPECT_EQ(r.points.front().tpr, 0.0);
  EXPECT_EQ(r.points.back().fpr, 1.0);
  EXPECT_EQ(r.points.back().tpr, 1.0);
}

TEST(Roc, InvertedAndTied) {
  EXPECT_EQ(roc_auc(std::vector<double>{0.9, 0.8, 0.1}, {true, true, false}).auc, 0.0);
  EXPECT_EQ(roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, {true, false, true, false}).auc, 0.5);
}

TEST(Roc, CurveIsMonotone) {
  CounterRng rng(2);
  std::vector<double> s(200);
  std::vector<bool> t(200);
  for (std::size_t i = 0; i < s.size(); ++i) {
    t[i] = rng.uniform() < 0.3;
    s[i] = std::floor(rng.uniform() * 20) / 20 - (t[i] ? 0.1 : 0.0);
  }
  const auto r = roc_auc(s, t);
  for (std::size_t i = 1; i < r.points.size(); ++i) {
    EXPECT_GE(r.points[i].fpr, r.points[i - 1].fpr);
    EXPECT_GE(r.points[i].tpr, r.points[i - 1].tpr);
    EXPECT_GT(r.points[i].threshold, r.points[i - 1].threshold);
  }
  EXPECT_NEAR(r.auc, pair_count_auc(s, t), 1e-12);
}

TEST(Roc, MatchesPairCounting) {
  CounterRng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.below(80);
    std::vector<double> s(n);
    std::vector<bool> t(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = i == 0 ? true : (i == 1 ? false : rng.uniform() < 0.5);
      s[i] = std::floor(rng.uniform() * 10) / 10;
    }
    EXPECT_NEAR(roc_auc(s, t).auc, pair_count_auc(s, t), 1e-12);
  }
}

TEST(Roc, Errors) {
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, 0.2}, {true, true}), Error);
  EXPECT_THROW(roc_auc(std::vector<double>{0.1}, {true, false}), Error);
  EXPECT_THROW(roc_auc(std::vector<double>{0.1, std::nan("")}, {true, false}), Error);
}
