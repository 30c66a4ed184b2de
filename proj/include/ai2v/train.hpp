#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ai2v/common.hpp"
#include "ai2v/corpus.hpp"
#include "ai2v/model.hpp"
#include "ai2v/optim.hpp"

namespace ai2v {

struct HeadGradient {
  Matrix<double> context_key;
  Matrix<double> target_query;
  Matrix<double> context_value;
};

/// Gradients of the AI2V loss. Embeddings and biases are row-sparse, the
/// small linear maps dense.
struct GradientSet {
  ModelDims dims;
  SparseRows context_embeddings;
  SparseRows target_embeddings;
  SparseRows target_bias;
  std::vector<HeadGradient> heads;
  Matrix<double> head_mix;
  Matrix<double> scorer_hidden;
  Matrix<double> scorer_output;
  Matrix<double> target_transform;

  static GradientSet zeros(const ModelDims& dims);
  void clear();
  void add(const GradientSet& other);

  /// Dense copies of every tensor in checkpoint order.
  std::vector<Matrix<double>> to_dense() const;
};

/// Reverse pass through the sampled-softmax loss; adds into `grads` and
/// returns the loss (identical to sampled_softmax_loss).
template <typename T>
double accumulate_backward(const BasicAi2vParams<T>& params, std::span<const ItemId> context, ItemId target,
                           std::span<const ItemId> negatives, GradientSet& grads);

template <typename T>
std::pair<double, GradientSet> backward(const BasicAi2vParams<T>& params, const TrainExample& example,
                                        std::span<const ItemId> negatives);

template <typename T>
void adagrad_step(BasicAi2vParams<T>& params, const GradientSet& grads, AdagradState<BasicAi2vParams<T>>& state);

struct FiniteDiffResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
};

/// Compares backward() against central differences (L(θ+ε) - L(θ-ε)) / 2ε
/// on a random subsample of at least `min_coordinates` coordinates covering
/// every tensor. Embedding and bias rows are drawn from the items the loss
/// actually touches. Relative error is |a - fd| / max(|a|, 1e-8), taken as 0
/// when both sides are below 1e-8.
FiniteDiffResult finite_diff_check(const BasicAi2vParams<double>& params, std::span<const ItemId> context,
                                   ItemId target, std::span<const ItemId> negatives, double eps, Rng& rng,
                                   std::size_t min_coordinates = 200);

/// Trims a context to its most recent `cap` items (0 = no cap).
inline std::span<const ItemId> capped_context(std::span<const ItemId> context, std::size_t cap) {
  return cap > 0 && context.size() > cap ? context.last(cap) : context;
}

/// Summed gradient of a minibatch; per-example gradients may be computed
/// on several threads but are always added in example order.
template <typename T>
double minibatch_gradient(const BasicAi2vParams<T>& params, std::span<const TrainExample> examples,
                          std::span<const std::vector<ItemId>> negatives, std::size_t context_cap, unsigned threads,
                          GradientSet& out);

struct Ai2vTrainResult {
  Ai2vParams params;
  AdagradState<Ai2vParams> state;
  std::vector<double> epoch_loss;
};

ModelDims model_dims(std::size_t items, const TrainConfig& config);

/// Seeded initialization used by fit().
Ai2vParams initial_params(std::size_t items, const TrainConfig& config);

/// Epoch loop: seeded shuffle of the training examples, minibatches of
/// config.minibatch with summed gradients, one Adagrad step per batch.
Ai2vTrainResult fit(const CorpusSplit& split, const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace ai2v
