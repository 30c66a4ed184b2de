#include "ai2v/optim.hpp"

#include <string>

namespace ai2v {

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw UsageError("invalid training config: " + what);
  };
  require(dim > 0, "dim must be positive");
  require(attn_dim > 0, "attn_dim must be positive");
  require(heads > 0, "heads must be positive");
  require(negatives > 0, "negatives must be positive");
  require(lr > 0.0, "lr must be positive");
  require(adagrad_eps > 0.0, "adagrad_eps must be positive");
  require(minibatch >= 1, "minibatch must be at least 1");
  require(subsample >= 0.0, "subsample must be non-negative");
  require(threads >= 1, "threads must be at least 1");
}

std::span<double> SparseRows::row(ItemId id) {
  const auto [it, inserted] = slot_.try_emplace(id, static_cast<std::uint32_t>(ids_.size()));
  if (inserted) {
    ids_.push_back(id);
    data_.resize(data_.size() + dim_, 0.0);
  }
  return {data_.data() + static_cast<std::size_t>(it->second) * dim_, dim_};
}

const double* SparseRows::find(ItemId id) const {
  const auto it = slot_.find(id);
  return it == slot_.end() ? nullptr : data_.data() + static_cast<std::size_t>(it->second) * dim_;
}

void SparseRows::add(const SparseRows& other) {
  for (std::size_t slot = 0; slot < other.rows(); ++slot) {
    auto dst = row(other.ids_[slot]);
    auto src = other.values(slot);
    for (std::size_t c = 0; c < dim_; ++c) dst[c] += src[c];
  }
}

void SparseRows::clear() {
  ids_.clear();
  data_.clear();
  slot_.clear();
}

}  // namespace ai2v
