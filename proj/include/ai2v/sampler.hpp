#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ai2v/common.hpp"

namespace ai2v {

/// Smoothed unigram distribution p_i ∝ count_i^power with O(1) alias draws.
/// Items with count 0 have probability 0 and are never drawn.
class UnigramTable {
 public:
  UnigramTable(std::span<const std::uint64_t> counts, double power = 0.5);

  std::size_t size() const { return probability_.size(); }
  double probability(ItemId i) const { return probability_[i]; }
  std::span<const double> probabilities() const { return probability_; }
  /// Number of items with positive probability.
  std::size_t support() const { return support_.size(); }

  ItemId draw(Rng& rng) const;

 private:
  std::vector<double> probability_;
  // Alias table over the positive-probability items only.
  std::vector<ItemId> support_;
  std::vector<double> accept_;
  std::vector<std::uint32_t> alias_;
};

/// n i.i.d. draws from the table, redrawing whenever `forbidden` comes up.
/// Duplicates are allowed.
std::vector<ItemId> sample_negatives(const UnigramTable& table, std::size_t n, ItemId forbidden, Rng& rng);
void sample_negatives(const UnigramTable& table, ItemId forbidden, Rng& rng, std::span<ItemId> out);

/// Popularity subsampling: an occurrence of item i is dropped with
/// probability max(0, 1 - sqrt(t / f_i)), f_i = count_i / total.
class SubsampleRule {
 public:
  SubsampleRule(std::span<const std::uint64_t> counts, double threshold = 3e-4);

  double discard_probability(ItemId i) const { return discard_[i]; }
  double threshold() const { return threshold_; }

  std::vector<ItemId> apply(std::span<const ItemId> history, Rng& rng) const;

 private:
  double threshold_;
  std::vector<double> discard_;
};

}  // namespace ai2v
