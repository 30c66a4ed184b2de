#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "ai2v/common.hpp"

namespace ai2v {

/// Hyperparameters shared by both models. Defaults follow the reference
/// setup: d = 100, d_a = 40, one head, 8 negatives, Adagrad at 0.1,
/// minibatches of 32, 40 epochs.
struct TrainConfig {
  std::size_t dim = 100;
  std::size_t attn_dim = 40;
  std::size_t heads = 1;
  std::size_t negatives = 8;
  double lr = 0.1;
  double adagrad_eps = 1e-10;
  std::size_t minibatch = 32;
  std::size_t epochs = 40;
  std::uint64_t seed = 1;
  /// I2V only; 0 disables subsampling.
  double subsample = 3e-4;
  double unigram_power = 0.5;
  /// Keep only the most recent context_cap context items; 0 = unlimited.
  std::size_t context_cap = 0;
  unsigned threads = 1;

  void validate() const;
};

/// Row-sparse gradient for an embedding-like tensor. Rows appear in
/// first-touch order, which keeps every reduction deterministic.
class SparseRows {
 public:
  explicit SparseRows(std::size_t dim = 0) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t rows() const { return ids_.size(); }
  std::span<const ItemId> ids() const { return ids_; }
  std::span<const double> values(std::size_t slot) const { return {data_.data() + slot * dim_, dim_}; }

  /// Gradient row for `id`, created as zeros on first access.
  std::span<double> row(ItemId id);
  /// nullptr when the row was never touched.
  const double* find(ItemId id) const;

  void add(const SparseRows& other);
  void clear();

 private:
  std::size_t dim_;
  std::vector<ItemId> ids_;
  std::vector<double> data_;
  std::unordered_map<ItemId, std::uint32_t> slot_;
};

/// Squared-gradient accumulators with the same layout as the parameters.
template <typename Params>
struct AdagradState {
  Params accum;
  double lr = 0.1;
  double eps = 1e-10;
};

/// One Adagrad coordinate update: G += g^2; theta -= lr * g / (sqrt(G) + eps).
template <typename T>
inline void adagrad_update(T& theta, T& accum, double g, double lr, double eps) {
  if (g == 0.0) return;
  const T stored = static_cast<T>(static_cast<double>(accum) + g * g);
  accum = stored;
  theta = static_cast<T>(static_cast<double>(theta) - lr * g / (std::sqrt(static_cast<double>(stored)) + eps));
}

template <typename T>
void adagrad_dense(Matrix<T>& param, Matrix<T>& accum, const Matrix<double>& grad, double lr, double eps) {
  auto p = param.flat();
  auto a = accum.flat();
  auto g = grad.flat();
  for (std::size_t i = 0; i < p.size(); ++i) adagrad_update(p[i], a[i], g[i], lr, eps);
}

template <typename T>
void adagrad_sparse(Matrix<T>& param, Matrix<T>& accum, const SparseRows& grad, double lr, double eps) {
  for (std::size_t slot = 0; slot < grad.rows(); ++slot) {
    const ItemId id = grad.ids()[slot];
    auto p = param.row(id);
    auto a = accum.row(id);
    auto g = grad.values(slot);
    for (std::size_t c = 0; c < p.size(); ++c) adagrad_update(p[c], a[c], g[c], lr, eps);
  }
}

/// Callback invoked after each epoch with (1-based epoch, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

}  // namespace ai2v
