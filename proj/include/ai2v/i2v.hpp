#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ai2v/common.hpp"
#include "ai2v/corpus.hpp"
#include "ai2v/optim.hpp"

namespace ai2v {

/// Item2vec parameters: a context vector and a target vector per item.
template <typename T>
struct BasicI2vParams {
  Matrix<T> context;  // J x d
  Matrix<T> target;   // J x d

  std::size_t num_items() const { return context.rows(); }
  std::size_t dim() const { return context.cols(); }

  static BasicI2vParams zeros(std::size_t items, std::size_t dim) {
    return {Matrix<T>(items, dim), Matrix<T>(items, dim)};
  }

  /// Entries uniform in (-0.5/d, 0.5/d).
  static BasicI2vParams init(std::size_t items, std::size_t dim, Rng& rng) {
    auto p = zeros(items, dim);
    const double bound = 0.5 / static_cast<double>(dim);
    p.for_each_tensor([&](Matrix<T>& m) {
      for (auto& x : m.flat()) x = static_cast<T>(rng.uniform(-bound, bound));
    });
    return p;
  }

  /// Checkpoint order: context, target.
  template <typename F>
  void for_each_tensor(F&& f) {
    f(context);
    f(target);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(context);
    f(target);
  }

  template <typename U>
  BasicI2vParams<U> cast() const {
    return {context.template cast<U>(), target.template cast<U>()};
  }

  bool operator==(const BasicI2vParams&) const = default;
};

using I2vParams = BasicI2vParams<float>;

/// Logits are clamped to this magnitude before sigmoid/log.
inline constexpr double kLogitClamp = 40.0;

/// Negative-sampling loss of one (context item, target item) pair:
/// -log sigma(u_i.v_j) - sum_k log sigma(-u_i.v_k).
template <typename T>
double sgns_pair_loss(const BasicI2vParams<T>& params, ItemId context, ItemId target, std::span<const ItemId> negatives);

struct I2vGradients {
  SparseRows context;
  SparseRows target;

  explicit I2vGradients(std::size_t dim = 0) : context(dim), target(dim) {}
  void clear() {
    context.clear();
    target.clear();
  }
};

/// Adds the gradient of sgns_pair_loss to `grads` and returns the loss.
template <typename T>
double sgns_accumulate(const BasicI2vParams<T>& params, ItemId context, ItemId target,
                       std::span<const ItemId> negatives, I2vGradients& grads);

template <typename T>
void adagrad_step(BasicI2vParams<T>& params, const I2vGradients& grads, AdagradState<BasicI2vParams<T>>& state);

/// Single-pair SGD step through Adagrad. Returns the pre-update loss.
template <typename T>
double sgns_step(BasicI2vParams<T>& params, ItemId context, ItemId target, std::span<const ItemId> negatives,
                 AdagradState<BasicI2vParams<T>>& state);

/// Every (l_i, l_j) with i != j, positions in row-major order.
std::vector<std::pair<ItemId, ItemId>> ordered_pairs(std::span<const ItemId> history);

struct I2vTrainResult {
  I2vParams params;
  AdagradState<I2vParams> state;
  std::vector<double> epoch_loss;
};

/// Trains on every ordered pair (l_i, l_j), i != j, of each user's
/// training-period items, re-subsampling histories every epoch. Pairs are
/// grouped into minibatches of config.minibatch whose gradients are summed.
I2vTrainResult train_i2v(const CorpusSplit& split, const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean of the context vectors of `context`.
template <typename T>
std::vector<double> i2v_user_vector(const BasicI2vParams<T>& params, std::span<const ItemId> context);

/// Cosine between a user vector and the item's target vector.
template <typename T>
double i2v_score(const BasicI2vParams<T>& params, std::span<const double> user, ItemId item) {
  return cosine(user, params.target.row(item));
}

}  // namespace ai2v
