#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ai2v/model.hpp"
#include "support/synthetic.hpp"

namespace ai2v {
namespace {

using P = BasicAi2vParams<double>;

void set_identity(Matrix<double>& m) {
  m.fill(0.0);
  for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) m(i, i) = 1.0;
}

// d = d_a = 2, one head, identity maps, u1 = (1,0), u2 = (0,1), v = (1,0).
P two_item_fixture() {
  auto p = P::zeros({3, 2, 2, 1});
  set_identity(p.heads[0].context_key);
  set_identity(p.heads[0].target_query);
  set_identity(p.heads[0].context_value);
  set_identity(p.head_mix);
  set_identity(p.target_transform);
  p.context_embeddings(0, 0) = 1.0;
  p.context_embeddings(1, 1) = 1.0;
  p.target_embeddings(2, 0) = 1.0;
  return p;
}

// Straightforward forward pass written independently of the library.
double reference_score(const P& p, const std::vector<ItemId>& ctx, ItemId target) {
  const std::size_t d = p.dims.dim, da = p.dims.attn_dim;
  auto mul = [](const Matrix<double>& m, const std::vector<double>& x) {
    std::vector<double> y(m.rows(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
      for (std::size_t c = 0; c < m.cols(); ++c) y[r] += m(r, c) * x[c];
    return y;
  };
  auto vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
  auto nrm = [](const std::vector<double>& x) { return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0)); };

  const auto v = vec(p.target_embeddings.row(target));
  std::vector<double> concat;
  for (const auto& h : p.heads) {
    const auto q = mul(h.target_query, v);
    std::vector<double> logits;
    for (ItemId i : ctx) {
      const auto k = mul(h.context_key, vec(p.context_embeddings.row(i)));
      logits.push_back(std::inner_product(k.begin(), k.end(), q.begin(), 0.0) / ((nrm(k) + 1e-8) * (nrm(q) + 1e-8)));
    }
    (void)da;
    double z = 0.0;
    for (double e : logits) z += std::exp(e);
    std::vector<double> pooled(d, 0.0);
    for (std::size_t m = 0; m < ctx.size(); ++m) {
      const auto u = p.context_embeddings.row(ctx[m]);
      for (std::size_t c = 0; c < d; ++c) pooled[c] += std::exp(logits[m]) / z * u[c];
    }
    const auto a = mul(h.context_value, pooled);
    concat.insert(concat.end(), a.begin(), a.end());
  }
  const auto user = mul(p.head_mix, concat);
  const auto t = mul(p.target_transform, v);
  std::vector<double> f;
  for (double x : user) f.push_back(x);
  for (double x : t) f.push_back(x);
  for (std::size_t c = 0; c < d; ++c) f.push_back(user[c] * t[c]);
  for (std::size_t c = 0; c < d; ++c) f.push_back(std::abs(user[c] - t[c]));
  auto hidden = mul(p.scorer.hidden, f);
  for (auto& x : hidden) x = std::max(0.0, x);
  const auto out = mul(p.scorer.output, hidden);
  return out[0] + p.target_bias(target, 0);
}

TEST(Attention, SingleContext) {
  const auto p = testing::random_params({10, 4, 3, 1}, 1);
  const std::vector<ItemId> ctx{3};
  const auto w = attention_weights(p, 0, ctx, 5);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0], 1.0);
}

TEST(Attention, IdenticalEmbeddingsSplitEvenly) {
  auto p = testing::random_params({10, 4, 3, 1}, 2);
  for (std::size_t c = 0; c < 4; ++c) p.context_embeddings(1, c) = p.context_embeddings(0, c);
  const std::vector<ItemId> ctx{0, 1};
  const auto w = attention_weights(p, 0, ctx, 7);
  EXPECT_NEAR(w[0], 0.5, 1e-12);
  EXPECT_NEAR(w[1], 0.5, 1e-12);
}

TEST(Attention, HandComputedSoftmax) {
  const auto p = two_item_fixture();
  const std::vector<ItemId> ctx{0, 1};
  const auto w = attention_weights(p, 0, ctx, 2);
  const double e = std::exp(1.0);
  EXPECT_NEAR(w[0], e / (e + 1.0), 1e-6);
  EXPECT_NEAR(w[0], 0.73106, 1e-5);
  EXPECT_NEAR(w[1], 0.26894, 1e-5);
}

TEST(AttentiveContext, IdentityValueSingleItem) {
  auto p = testing::random_params({10, 4, 3, 1}, 3);
  set_identity(p.heads[0].context_value);
  const std::vector<ItemId> ctx{6};
  const auto a = attentive_context(p, 0, ctx, 2);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(a[c], p.context_embeddings(6, c), 1e-12);
}

TEST(AttentiveContext, ZeroValueAnnihilates) {
  auto p = testing::random_params({10, 4, 3, 1}, 3);
  p.heads[0].context_value.fill(0.0);
  const std::vector<ItemId> ctx{1, 2, 3};
  for (double x : attentive_context(p, 0, ctx, 2)) EXPECT_EQ(x, 0.0);
}

TEST(AttentiveContext, WeightedSum) {
  const auto p = two_item_fixture();
  const std::vector<ItemId> ctx{0, 1};
  const auto a = attentive_context(p, 0, ctx, 2);
  EXPECT_NEAR(a[0], 0.73106, 1e-5);
  EXPECT_NEAR(a[1], 0.26894, 1e-5);
}

TEST(UserVector, IdentityMixSingleHead) {
  auto p = testing::random_params({10, 4, 3, 1}, 4);
  set_identity(p.head_mix);
  const std::vector<ItemId> ctx{1, 5};
  const auto a = attentive_context(p, 0, ctx, 8);
  const auto z = user_vector(p, ctx, 8);
  for (std::size_t c = 0; c < 4; ++c) EXPECT_NEAR(z[c], a[c], 1e-12);
}

TEST(UserVector, ZeroMix) {
  auto p = testing::random_params({10, 4, 3, 2}, 4);
  p.head_mix.fill(0.0);
  const std::vector<ItemId> ctx{1, 5};
  for (double x : user_vector(p, ctx, 8)) EXPECT_EQ(x, 0.0);
}

TEST(UserVector, TwoHeadsScalarMix) {
  // d = 1: each head's attentive vector is value * u for a single item.
  auto p = P::zeros({2, 1, 1, 2});
  p.context_embeddings(0, 0) = 1.0;
  p.target_embeddings(1, 0) = 1.0;
  for (auto& h : p.heads) {
    h.context_key(0, 0) = 1.0;
    h.target_query(0, 0) = 1.0;
  }
  p.heads[0].context_value(0, 0) = 0.5;
  p.heads[1].context_value(0, 0) = 0.25;
  p.head_mix(0, 0) = 1.0;
  p.head_mix(0, 1) = 2.0;
  const std::vector<ItemId> ctx{0};
  EXPECT_NEAR(user_vector(p, ctx, 1)[0], 1.0, 1e-12);
}

TEST(NeuralScore, ZeroHidden) {
  NeuralScorer<double> s{Matrix<double>(3, 12), Matrix<double>(1, 3, 1.0)};
  const std::vector<double> u{1, 2, 3}, v{-1, 0, 4};
  EXPECT_EQ(neural_score(s, std::span<const double>(u), std::span<const double>(v)), 0.0);
}

TEST(NeuralScore, HandEvaluated) {
  NeuralScorer<double> s{Matrix<double>(1, 4, 1.0), Matrix<double>(1, 1, 1.0)};
  const std::vector<double> u{2}, v{3};
  EXPECT_DOUBLE_EQ(neural_score(s, std::span<const double>(u), std::span<const double>(v)), 12.0);
}

TEST(NeuralScore, EqualInputsZeroDifferenceBlock) {
  // Only the |u - v| block has nonzero weights, so u == v scores exactly 0.
  const std::size_t d = 3;
  NeuralScorer<double> s{Matrix<double>(d, 4 * d), Matrix<double>(1, d, 1.0)};
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t c = 3 * d; c < 4 * d; ++c) s.hidden(r, c) = 1.0;
  const std::vector<double> u{0.3, -2, 5};
  EXPECT_EQ(neural_score(s, std::span<const double>(u), std::span<const double>(u)), 0.0);
}

TEST(Similarity, BiasPassthrough) {
  auto p = testing::random_params({4, 3, 2, 1}, 5);
  p.scorer.hidden.fill(0.0);
  p.scorer.output.fill(0.0);
  p.target_bias(2, 0) = 1.5;
  const std::vector<double> z{1, 2, 3};
  EXPECT_DOUBLE_EQ(similarity(p, z, 2), 1.5);
}

TEST(Similarity, Composition) {
  auto p = P::zeros({1, 1, 1, 1});
  p.target_embeddings(0, 0) = 3.0;
  p.target_transform(0, 0) = 1.0;
  p.scorer.hidden.fill(1.0);
  p.scorer.output.fill(1.0);
  const std::vector<double> z{2};
  EXPECT_DOUBLE_EQ(similarity(p, z, 0), 12.0);
}

TEST(Similarity, ConstantBiasShiftKeepsRanking) {
  auto p = testing::random_params({30, 4, 3, 1}, 6);
  const std::vector<ItemId> ctx{1, 2, 3};
  std::vector<ItemId> all(30);
  std::iota(all.begin(), all.end(), 0u);
  const auto before = score_catalog(p, ctx, all);
  for (auto& b : p.target_bias.flat()) b += 3.25;
  const auto after = score_catalog(p, ctx, all);
  for (std::size_t i = 0; i < all.size(); ++i) EXPECT_NEAR(after[i] - before[i], 3.25, 1e-9);
  std::vector<ItemId> ob = all, oa = all;
  std::stable_sort(ob.begin(), ob.end(), [&](ItemId a, ItemId b) { return before[a] > before[b]; });
  std::stable_sort(oa.begin(), oa.end(), [&](ItemId a, ItemId b) { return after[a] > after[b]; });
  EXPECT_EQ(ob, oa);
}

TEST(SampledSoftmax, EqualScores) {
  auto p = testing::random_params({20, 4, 3, 1}, 7);
  p.scorer.output.fill(0.0);
  p.target_bias.fill(0.4);
  const std::vector<ItemId> ctx{1, 2};
  const std::vector<ItemId> negs{3, 4, 5, 6, 7, 8, 9, 10};
  EXPECT_NEAR(sampled_softmax_loss(p, ctx, 0, negs), std::log(9.0), 1e-5);
  const std::vector<ItemId> one{3};
  EXPECT_NEAR(sampled_softmax_loss(p, ctx, 0, one), std::log(2.0), 1e-5);
}

TEST(SampledSoftmax, SeparatedScores) {
  auto p = testing::random_params({20, 4, 3, 1}, 7);
  p.scorer.output.fill(0.0);
  p.target_bias.fill(-10.0);
  p.target_bias(0, 0) = 10.0;
  const std::vector<ItemId> ctx{1, 2};
  const std::vector<ItemId> negs{3, 4, 5, 6, 7, 8, 9, 10};
  const double loss = sampled_softmax_loss(p, ctx, 0, negs);
  EXPECT_NEAR(loss, std::log1p(8.0 * std::exp(-20.0)), 1e-15);
  p.target_bias(0, 0) = 30.0;
  EXPECT_LT(sampled_softmax_loss(p, ctx, 0, negs), 1e-16);
}

TEST(SampledSoftmax, MatchesReferenceAndNonNegative) {
  Rng rng(10);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = testing::random_params({25, 6, 4, 1 + trial % 2}, 40 + trial);
    const auto ctx = testing::random_items(1 + rng.below(6), 25, rng);
    const auto negs = testing::random_items(8, 25, rng);
    const ItemId target = 24;
    ForwardTrace trace;
    const double loss = sampled_softmax_loss(p, ctx, target, negs, &trace);
    std::vector<double> o{reference_score(p, ctx, target)};
    for (ItemId k : negs) o.push_back(reference_score(p, ctx, k));
    const double mx = *std::max_element(o.begin(), o.end());
    double z = 0.0;
    for (double x : o) z += std::exp(x - mx);
    EXPECT_NEAR(loss, mx + std::log(z) - o[0], 1e-9);
    EXPECT_GE(loss, 0.0);
    EXPECT_EQ(trace.candidates.size(), 9u);
    EXPECT_NEAR(std::accumulate(trace.probabilities.begin(), trace.probabilities.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(ScoreCatalog, MatchesPerCandidateLoop) {
  const auto p = testing::random_params({100, 8, 4, 2}, 11);
  Rng rng(1);
  const auto ctx = testing::random_items(7, 100, rng);
  std::vector<ItemId> all(100);
  std::iota(all.begin(), all.end(), 0u);
  const auto targets = project_targets(p);
  const auto batch = score_catalog(p, ctx, all);
  const auto cached = score_catalog(p, ctx, all, &targets);
  for (ItemId i = 0; i < 100; ++i) {
    const auto z = user_vector(p, ctx, i);
    const double loop = similarity(p, z, i);
    EXPECT_NEAR(batch[i], loop, 1e-6);
    EXPECT_NEAR(cached[i], loop, 1e-6);
    EXPECT_NEAR(batch[i], reference_score(p, ctx, i), 1e-9);
  }
}

TEST(ScoreCatalog, SingletonAndDuplicates) {
  const auto p = testing::random_params({10, 4, 3, 1}, 12);
  const std::vector<ItemId> ctx{1, 2};
  const std::vector<ItemId> one{5};
  EXPECT_NEAR(score_catalog(p, ctx, one)[0], similarity(p, user_vector(p, ctx, 5), 5), 1e-12);
  const std::vector<ItemId> dup{5, 3, 5};
  const auto s = score_catalog(p, ctx, dup);
  EXPECT_EQ(s[0], s[2]);
}

TEST(Invariants, RandomPairs) {
  Rng rng(2024);
  const double bound = std::exp(2.0) + 1e-6;
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = testing::random_params({40, 8, 4, 1 + trial % 3}, 3000 + trial);
    auto ctx = testing::random_items(1 + rng.below(12), 40, rng);
    const ItemId target = static_cast<ItemId>(rng.below(40));
    for (std::size_t h = 0; h < p.dims.heads; ++h) {
      const auto w = attention_weights(p, h, ctx, target);
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-6);
      const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
      EXPECT_GT(*lo, 0.0);
      EXPECT_LE(*hi / *lo, bound);
    }
    const auto z = user_vector(p, ctx, target);
    rng.shuffle(ctx);
    const auto zs = user_vector(p, ctx, target);
    for (std::size_t c = 0; c < z.size(); ++c) EXPECT_NEAR(z[c], zs[c], 1e-6);
  }
}

TEST(Params, InitShapesAndRanges) {
  Rng rng(1);
  const ModelDims dims{30, 10, 4, 2};
  const auto p = Ai2vParams::init(dims, rng);
  EXPECT_EQ(p.context_embeddings.rows(), 30u);
  EXPECT_EQ(p.heads.size(), 2u);
  EXPECT_EQ(p.heads[0].context_key.rows(), 4u);
  EXPECT_EQ(p.heads[0].context_key.cols(), 10u);
  EXPECT_EQ(p.heads[0].context_value.rows(), 10u);
  EXPECT_EQ(p.head_mix.cols(), 20u);
  EXPECT_EQ(p.scorer.hidden.cols(), 40u);
  EXPECT_EQ(p.scorer.output.rows(), 1u);
  EXPECT_EQ(p.target_bias.rows(), 30u);
  for (float x : p.context_embeddings.flat()) EXPECT_LE(std::abs(x), 0.05f);
  for (float x : p.target_bias.flat()) EXPECT_EQ(x, 0.0f);
  const float glorot = static_cast<float>(std::sqrt(6.0 / 50.0));
  for (float x : p.scorer.hidden.flat()) EXPECT_LE(std::abs(x), glorot);
}

}  // namespace
}  // namespace ai2v
