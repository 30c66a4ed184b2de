#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "ai2v/sampler.hpp"

namespace ai2v {
namespace {

using Counts = std::vector<std::uint64_t>;

TEST(UnigramTable, EqualCounts) {
  const Counts c{1, 1};
  UnigramTable t(c, 0.5);
  EXPECT_NEAR(t.probability(0), 0.5, 1e-12);
  EXPECT_NEAR(t.probability(1), 0.5, 1e-12);
}

TEST(UnigramTable, SquareRootSmoothing) {
  const Counts c{4, 1};
  UnigramTable t(c, 0.5);
  EXPECT_NEAR(t.probability(0), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(t.probability(1), 1.0 / 3.0, 1e-12);
}

TEST(UnigramTable, PowerZeroIsUniformOverSupport) {
  const Counts c{7, 0, 1, 100};
  UnigramTable t(c, 0.0);
  EXPECT_NEAR(t.probability(0), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(t.probability(1), 0.0);
  EXPECT_NEAR(t.probability(2), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(t.probability(3), 1.0 / 3.0, 1e-12);
  EXPECT_EQ(t.support(), 3u);
}

TEST(UnigramTable, ProbabilitiesSumToOne) {
  Counts c(500);
  Rng rng(1);
  for (auto& x : c) x = rng.below(1000);
  UnigramTable t(c, 0.5);
  const auto p = t.probabilities();
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_GE(p[i], 0.0);
    if (c[i] == 0) EXPECT_EQ(p[i], 0.0);
  }
}

TEST(UnigramTable, AllZeroThrows) {
  const Counts c{0, 0, 0};
  EXPECT_THROW(UnigramTable(c, 0.5), DataError);
}

TEST(SampleNegatives, ForcedWhenForbidden) {
  const Counts c{1, 1};
  UnigramTable t(c, 0.5);
  Rng rng(5);
  for (ItemId x : sample_negatives(t, 50, 0, rng)) EXPECT_EQ(x, 1u);
}

TEST(SampleNegatives, ZeroDraws) {
  const Counts c{1, 1};
  UnigramTable t(c, 0.5);
  Rng rng(5);
  EXPECT_TRUE(sample_negatives(t, 0, 0, rng).empty());
}

TEST(SampleNegatives, OnlyForbiddenHasMassThrows) {
  const Counts c{0, 3, 0};
  UnigramTable t(c, 0.5);
  Rng rng(5);
  EXPECT_THROW(sample_negatives(t, 1, 1, rng), DataError);
}

TEST(SampleNegatives, EmpiricalFrequencies) {
  const Counts c{4, 1};
  UnigramTable t(c, 0.5);
  Rng rng(12345);
  const std::size_t n = 100000;
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < n; ++i) zeros += t.draw(rng) == 0;
  EXPECT_NEAR(static_cast<double>(zeros) / n, 2.0 / 3.0, 0.01);
}

TEST(SampleNegatives, ChiSquareOnLargerTable) {
  const Counts c{1, 2, 3, 5, 8, 13, 21, 0, 34, 55};
  UnigramTable t(c, 0.5);
  Rng rng(777);
  const std::size_t n = 100000;
  std::vector<double> hist(c.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) hist[t.draw(rng)] += 1.0;
  double chi2 = 0.0;
  std::size_t dof = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double expected = n * t.probability(i);
    if (expected == 0.0) {
      EXPECT_EQ(hist[i], 0.0);
      continue;
    }
    chi2 += (hist[i] - expected) * (hist[i] - expected) / expected;
    ++dof;
  }
  // 0.999 quantile of chi-square with 8 degrees of freedom.
  ASSERT_EQ(dof - 1, 8u);
  EXPECT_LT(chi2, 26.12);
}

TEST(SampleNegatives, NeverForbiddenAndDeterministic) {
  Counts c(30, 1);
  c[3] = 1000;
  UnigramTable t(c, 0.5);
  Rng a(9), b(9);
  const auto x = sample_negatives(t, 2000, 3, a);
  const auto y = sample_negatives(t, 2000, 3, b);
  EXPECT_EQ(x, y);
  for (ItemId i : x) EXPECT_NE(i, 3u);
}

TEST(Subsample, BelowThresholdUnchanged) {
  const Counts c{1, 1, 1, 1};
  SubsampleRule rule(c, 0.5);
  Rng rng(1);
  const std::vector<ItemId> h{0, 1, 2, 3, 2, 1};
  EXPECT_EQ(rule.apply(h, rng), h);
}

TEST(Subsample, DiscardProbabilityFormula) {
  // f_0 = 4t when t = 0.2 and f_0 = 0.8.
  const Counts c{8, 2};
  SubsampleRule rule(c, 0.2);
  EXPECT_NEAR(rule.discard_probability(0), 0.5, 1e-12);
  EXPECT_EQ(rule.discard_probability(1), 0.0);
}

TEST(Subsample, EmptyHistory) {
  const Counts c{1};
  SubsampleRule rule(c, 3e-4);
  Rng rng(1);
  EXPECT_TRUE(rule.apply(std::vector<ItemId>{}, rng).empty());
}

TEST(Subsample, PreservesOrderAndRate) {
  const Counts c{8, 2};
  SubsampleRule rule(c, 0.2);
  Rng rng(3);
  std::vector<ItemId> h;
  for (int i = 0; i < 20000; ++i) h.push_back(i % 2 == 0 ? 0 : 1);
  const auto kept = rule.apply(h, rng);
  std::size_t zeros = 0, ones = 0;
  for (ItemId i : kept) (i == 0 ? zeros : ones)++;
  EXPECT_EQ(ones, 10000u);
  EXPECT_NEAR(zeros / 10000.0, 0.5, 0.02);
  // Survivors keep their relative order: the sequence still alternates
  // wherever both neighbours survived, so each 1 follows a 0 or another 1.
  for (std::size_t i = 0; i + 1 < kept.size(); ++i) {
    if (kept[i] == 0) EXPECT_EQ(kept[i + 1], 1u);
  }
}

}  // namespace
}  // namespace ai2v
