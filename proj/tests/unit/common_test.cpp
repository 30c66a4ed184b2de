#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "ai2v/common.hpp"

namespace ai2v {
namespace {

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, NamedStreamsDiffer) {
  auto a = Rng::stream(1, "init");
  auto b = Rng::stream(1, "shuffle");
  auto c = Rng::stream(1, "init");
  const auto x = a.next_u64();
  EXPECT_NE(x, b.next_u64());
  EXPECT_EQ(x, c.next_u64());
}

TEST(Rng, UniformAndBelowStayInRange) {
  Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.below(7), 7u);
  }
}

TEST(Rng, BelowIsRoughlyUniform) {
  Rng rng(11);
  std::vector<int> hist(5, 0);
  for (int i = 0; i < 50000; ++i) ++hist[rng.below(5)];
  for (int h : hist) EXPECT_NEAR(h / 50000.0, 0.2, 0.01);
}

TEST(Kernels, Cosine) {
  const std::vector<double> a{1, 1}, b{1, 0}, c{0, 1}, zero{0, 0};
  EXPECT_NEAR(cosine(a, a), 1.0, 1e-6);
  EXPECT_NEAR(cosine(b, c), 0.0, 1e-12);
  EXPECT_NEAR(cosine(a, b), 1.0 / std::sqrt(2.0), 1e-5);
  EXPECT_NEAR(cosine(zero, a), 0.0, 1e-12);
}

TEST(Kernels, MatvecAndTranspose) {
  Matrix<float> m(2, 3);
  for (std::size_t i = 0; i < 6; ++i) m.flat()[i] = static_cast<float>(i + 1);
  const std::vector<double> x{1, 0, -1};
  std::vector<double> y(2);
  matvec(m, std::span<const double>(x), std::span<double>(y));
  EXPECT_DOUBLE_EQ(y[0], -2.0);
  EXPECT_DOUBLE_EQ(y[1], -2.0);

  std::vector<double> back(3, 0.0);
  const std::vector<double> w{1, 2};
  matvec_transpose_add(m, std::span<const double>(w), std::span<double>(back));
  EXPECT_DOUBLE_EQ(back[0], 9.0);
  EXPECT_DOUBLE_EQ(back[1], 12.0);
  EXPECT_DOUBLE_EQ(back[2], 15.0);
}

TEST(ParallelFor, VisitsEveryIndexOnce) {
  for (unsigned threads : {1u, 2u, 5u}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

}  // namespace
}  // namespace ai2v
