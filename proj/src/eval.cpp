#include "ai2v/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "ai2v/train.hpp"

namespace ai2v {

Ai2vScorer::Ai2vScorer(const Ai2vParams& params, std::size_t context_cap)
    : params_(params), context_cap_(context_cap), targets_(project_targets(params)) {}

void Ai2vScorer::score(std::span<const ItemId> context, std::span<const ItemId> candidates,
                       std::span<double> out) const {
  const auto scores = score_catalog(params_, capped_context(context, context_cap_), candidates, &targets_);
  std::copy(scores.begin(), scores.end(), out.begin());
}

void I2vScorer::score(std::span<const ItemId> context, std::span<const ItemId> candidates,
                      std::span<double> out) const {
  const auto user = i2v_user_vector(params_, context);
  for (std::size_t k = 0; k < candidates.size(); ++k) out[k] = i2v_score(params_, user, candidates[k]);
}

void StaticScorer::score(std::span<const ItemId>, std::span<const ItemId> candidates, std::span<double> out) const {
  for (std::size_t k = 0; k < candidates.size(); ++k) out[k] = values_[candidates[k]];
}

std::vector<TrainExample> make_eval_examples(std::span<const ItemId> history, std::uint32_t user) {
  if (history.size() < 2) throw DataError("evaluation examples need a history of at least two items");
  auto shared = std::make_shared<const std::vector<ItemId>>(history.begin(), history.end());
  std::vector<TrainExample> out;
  for (std::size_t j = 1; j < history.size(); ++j) {
    out.push_back({shared, user, static_cast<std::uint32_t>(j), history[j]});
  }
  return out;
}

RankResult rank_from_scores(std::span<const ItemId> candidates, std::span<const double> scores, ItemId target) {
  const auto it = std::find(candidates.begin(), candidates.end(), target);
  if (it == candidates.end()) throw DataError("rank_target: target item is not among the candidates");
  const double s = scores[static_cast<std::size_t>(it - candidates.begin())];
  std::uint32_t rank = 1;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const ItemId c = candidates[k];
    if (c == target) continue;
    if (scores[k] > s || (scores[k] == s && c < target)) ++rank;
  }
  return {0, rank, static_cast<std::uint32_t>(candidates.size())};
}

RankResult rank_target(const CatalogScorer& scorer, const TrainExample& example, std::span<const ItemId> candidates) {
  std::vector<double> scores(candidates.size());
  scorer.score(example.context(), candidates, scores);
  return rank_from_scores(candidates, scores, example.target);
}

double hr_at_k(std::span<const std::uint32_t> ranks, std::size_t k) {
  if (ranks.empty()) throw DataError("hr_at_k: no ranks");
  const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::uint32_t r) { return r <= k; });
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mrr_at_k(std::span<const std::uint32_t> ranks, std::size_t k) {
  if (ranks.empty()) throw DataError("mrr_at_k: no ranks");
  double sum = 0.0;
  for (auto r : ranks) {
    if (r <= k) sum += 1.0 / static_cast<double>(r);
  }
  return sum / static_cast<double>(ranks.size());
}

namespace {

std::vector<ItemId> candidate_set(std::size_t items, std::span<const ItemId> context, ItemId target,
                                  bool exclude_seen) {
  std::vector<ItemId> out;
  out.reserve(items);
  if (!exclude_seen) {
    for (ItemId i = 0; i < items; ++i) out.push_back(i);
    return out;
  }
  std::vector<bool> seen(items, false);
  for (ItemId i : context) seen[i] = true;
  seen[target] = false;
  for (ItemId i = 0; i < items; ++i) {
    if (!seen[i]) out.push_back(i);
  }
  return out;
}

}  // namespace

EvalReport evaluate(const CatalogScorer& scorer, const CorpusSplit& split, const EvalOptions& options) {
  if (split.test.empty()) throw DataError("evaluation needs a non-empty test set");
  if (scorer.num_items() != split.num_items()) {
    throw DataError("model covers " + std::to_string(scorer.num_items()) + " items but the corpus has " +
                    std::to_string(split.num_items()));
  }
  EvalReport report;
  report.n_examples = split.test.size();
  report.ranks.resize(split.test.size());
  parallel_for(split.test.size(), options.threads, [&](std::size_t i) {
    const auto& ex = split.test[i];
    const auto candidates = candidate_set(split.num_items(), ex.context(), ex.target, options.exclude_seen);
    auto r = rank_target(scorer, ex, candidates);
    r.example = i;
    report.ranks[i] = r;
  });
  std::vector<std::uint32_t> ranks;
  ranks.reserve(report.ranks.size());
  for (const auto& r : report.ranks) ranks.push_back(r.rank);
  for (std::size_t c = 0; c < kCutoffs.size(); ++c) {
    report.hr[c] = hr_at_k(ranks, kCutoffs[c]);
    report.mrr[c] = mrr_at_k(ranks, kCutoffs[c]);
  }
  return report;
}

std::vector<std::pair<ItemId, double>> recommend(const CatalogScorer& scorer, std::span<const ItemId> context,
                                                 std::size_t top_k, bool exclude_seen) {
  std::vector<ItemId> candidates;
  std::vector<bool> seen(scorer.num_items(), false);
  if (exclude_seen) {
    for (ItemId i : context) seen[i] = true;
  }
  for (ItemId i = 0; i < scorer.num_items(); ++i) {
    if (!seen[i]) candidates.push_back(i);
  }
  std::vector<double> scores(candidates.size());
  scorer.score(context, candidates, scores);
  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  top_k = std::min(top_k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return candidates[a] < candidates[b];
                    });
  std::vector<std::pair<ItemId, double>> out;
  for (std::size_t k = 0; k < top_k; ++k) out.emplace_back(candidates[order[k]], scores[order[k]]);
  return out;
}

void write_report(std::ostream& out, std::span<const std::pair<std::string, EvalReport>> rows) {
  out << "model\thr@5\thr@10\thr@20\tmrr@5\tmrr@10\tmrr@20\n";
  char buf[32];
  for (const auto& [name, report] : rows) {
    out << name;
    for (double v : report.hr) {
      std::snprintf(buf, sizeof buf, "\t%.5f", v);
      out << buf;
    }
    for (double v : report.mrr) {
      std::snprintf(buf, sizeof buf, "\t%.5f", v);
      out << buf;
    }
    out << '\n';
  }
}

void write_rank_dump(std::ostream& out, const CorpusSplit& split, const EvalReport& report) {
  out << "user\tprefix_len\ttarget\trank\n";
  for (const auto& r : report.ranks) {
    const auto& ex = split.test[r.example];
    out << split.users[ex.user].id << '\t' << ex.length << '\t' << split.vocab.external(ex.target) << '\t' << r.rank
        << '\n';
  }
}

}  // namespace ai2v
