#include "ai2v/sampler.hpp"

#include <cmath>

namespace ai2v {

UnigramTable::UnigramTable(std::span<const std::uint64_t> counts, double power)
    : probability_(counts.size(), 0.0) {
  double total = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    probability_[i] = std::pow(static_cast<double>(counts[i]), power);
    total += probability_[i];
    support_.push_back(static_cast<ItemId>(i));
  }
  if (support_.empty()) throw DataError("unigram table needs at least one item with a positive count");
  for (auto& p : probability_) p /= total;

  // Vose's alias method on the support.
  const std::size_t n = support_.size();
  accept_.assign(n, 1.0);
  alias_.resize(n);
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t k = 0; k < n; ++k) {
    scaled[k] = probability_[support_[k]] * static_cast<double>(n);
    alias_[k] = static_cast<std::uint32_t>(k);
    (scaled[k] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(k));
  }
  while (!small.empty() && !large.empty()) {
    const auto s = small.back();
    small.pop_back();
    const auto l = large.back();
    accept_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    if (scaled[l] < 1.0) {
      large.pop_back();
      small.push_back(l);
    }
  }
  // Leftovers are 1 up to rounding.
  for (auto k : small) accept_[k] = 1.0;
  for (auto k : large) accept_[k] = 1.0;
}

ItemId UnigramTable::draw(Rng& rng) const {
  const auto column = static_cast<std::size_t>(rng.below(support_.size()));
  const double coin = rng.uniform();
  return support_[coin < accept_[column] ? column : alias_[column]];
}

void sample_negatives(const UnigramTable& table, ItemId forbidden, Rng& rng, std::span<ItemId> out) {
  if (out.empty()) return;
  const bool forbidden_live = forbidden < table.size() && table.probability(forbidden) > 0.0;
  if (table.support() == 0 || (table.support() == 1 && forbidden_live)) {
    throw DataError("negative sampling: no item other than the positive target has probability mass");
  }
  for (auto& slot : out) {
    ItemId k;
    do {
      k = table.draw(rng);
    } while (k == forbidden);
    slot = k;
  }
}

std::vector<ItemId> sample_negatives(const UnigramTable& table, std::size_t n, ItemId forbidden, Rng& rng) {
  std::vector<ItemId> out(n);
  sample_negatives(table, forbidden, rng, out);
  return out;
}

SubsampleRule::SubsampleRule(std::span<const std::uint64_t> counts, double threshold)
    : threshold_(threshold), discard_(counts.size(), 0.0) {
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  if (total == 0.0 || threshold <= 0.0) return;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double f = static_cast<double>(counts[i]) / total;
    if (f > threshold) discard_[i] = 1.0 - std::sqrt(threshold / f);
  }
}

std::vector<ItemId> SubsampleRule::apply(std::span<const ItemId> history, Rng& rng) const {
  std::vector<ItemId> kept;
  kept.reserve(history.size());
  for (ItemId i : history) {
    const double p = i < discard_.size() ? discard_[i] : 0.0;
    // Items below the threshold consume no randomness.
    if (p > 0.0 && rng.uniform() < p) continue;
    kept.push_back(i);
  }
  return kept;
}

}  // namespace ai2v
