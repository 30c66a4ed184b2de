#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ai2v/common.hpp"
#include "ai2v/corpus.hpp"
#include "ai2v/i2v.hpp"
#include "ai2v/model.hpp"

namespace ai2v {

/// Anything that can score candidate items for a user prefix.
class CatalogScorer {
 public:
  virtual ~CatalogScorer() = default;
  virtual std::size_t num_items() const = 0;
  virtual void score(std::span<const ItemId> context, std::span<const ItemId> candidates,
                     std::span<double> out) const = 0;
};

/// Candidate-conditioned AI2V scores; target-side projections are cached.
class Ai2vScorer final : public CatalogScorer {
 public:
  explicit Ai2vScorer(const Ai2vParams& params, std::size_t context_cap = 0);
  std::size_t num_items() const override { return params_.dims.items; }
  void score(std::span<const ItemId> context, std::span<const ItemId> candidates,
             std::span<double> out) const override;

 private:
  const Ai2vParams& params_;
  std::size_t context_cap_;
  TargetCache targets_;
};

/// Cosine between the mean context vector and each target vector.
class I2vScorer final : public CatalogScorer {
 public:
  explicit I2vScorer(const I2vParams& params) : params_(params) {}
  std::size_t num_items() const override { return params_.num_items(); }
  void score(std::span<const ItemId> context, std::span<const ItemId> candidates,
             std::span<double> out) const override;

 private:
  const I2vParams& params_;
};

/// Ignores the context and scores by a fixed per-item value, e.g. training popularity.
class StaticScorer final : public CatalogScorer {
 public:
  explicit StaticScorer(std::vector<double> values) : values_(std::move(values)) {}
  std::size_t num_items() const override { return values_.size(); }
  void score(std::span<const ItemId> context, std::span<const ItemId> candidates,
             std::span<double> out) const override;

 private:
  std::vector<double> values_;
};

/// All K - 1 prefix examples (x_1..x_{j-1} -> x_j), j = 2..K.
std::vector<TrainExample> make_eval_examples(std::span<const ItemId> history, std::uint32_t user = 0);

struct RankResult {
  std::size_t example = 0;
  std::uint32_t rank = 0;        // 1-based
  std::uint32_t candidates = 0;
};

/// 1 + #{c : s_c > s_target} + #{c != target : s_c == s_target, c < target}.
/// Throws DataError if the target is not a candidate.
RankResult rank_from_scores(std::span<const ItemId> candidates, std::span<const double> scores, ItemId target);

RankResult rank_target(const CatalogScorer& scorer, const TrainExample& example, std::span<const ItemId> candidates);

inline constexpr std::array<std::size_t, 3> kCutoffs = {5, 10, 20};

double hr_at_k(std::span<const std::uint32_t> ranks, std::size_t k);
double mrr_at_k(std::span<const std::uint32_t> ranks, std::size_t k);

struct EvalOptions {
  /// Drop the user's context items (other than the target) from the candidates.
  bool exclude_seen = false;
  unsigned threads = 1;
};

struct EvalReport {
  std::array<double, 3> hr{};   // at kCutoffs
  std::array<double, 3> mrr{};  // at kCutoffs
  std::size_t n_examples = 0;
  std::vector<RankResult> ranks;
};

EvalReport evaluate(const CatalogScorer& scorer, const CorpusSplit& split, const EvalOptions& options = {});

/// Items sorted by descending score, ties by smaller index; at most top_k.
std::vector<std::pair<ItemId, double>> recommend(const CatalogScorer& scorer, std::span<const ItemId> context,
                                                 std::size_t top_k, bool exclude_seen = false);

/// "model\thr@5\thr@10\thr@20\tmrr@5\tmrr@10\tmrr@20" plus one row per model.
void write_report(std::ostream& out, std::span<const std::pair<std::string, EvalReport>> rows);

/// "user\tprefix_len\ttarget\trank" for every test example.
void write_rank_dump(std::ostream& out, const CorpusSplit& split, const EvalReport& report);

}  // namespace ai2v
