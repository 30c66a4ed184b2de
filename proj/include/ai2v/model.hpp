#pragma once

#include <span>
#include <vector>

#include "ai2v/common.hpp"

namespace ai2v {

struct ModelDims {
  std::size_t items = 0;
  std::size_t dim = 0;       // d
  std::size_t attn_dim = 0;  // d_a
  std::size_t heads = 0;     // N

  bool operator==(const ModelDims&) const = default;
};

/// One context-target attention unit.
template <typename T>
struct AttentionHead {
  Matrix<T> context_key;    // d_a x d, maps context vectors into attention space
  Matrix<T> target_query;   // d_a x d, maps the target vector into attention space
  Matrix<T> context_value;  // d x d, maps context vectors before pooling

  bool operator==(const AttentionHead&) const = default;
};

/// Single-hidden-layer scorer: output . relu(hidden . [u; v; u*v; |u-v|]).
template <typename T>
struct NeuralScorer {
  Matrix<T> hidden;  // d x 4d
  Matrix<T> output;  // 1 x d

  bool operator==(const NeuralScorer&) const = default;
};

template <typename T>
struct BasicAi2vParams {
  ModelDims dims;
  Matrix<T> context_embeddings;  // J x d
  Matrix<T> target_embeddings;   // J x d
  std::vector<AttentionHead<T>> heads;
  Matrix<T> head_mix;  // d x (N d), combines the per-head attentive vectors
  NeuralScorer<T> scorer;
  Matrix<T> target_transform;  // d x d, applied to the target vector before scoring
  Matrix<T> target_bias;       // J x 1

  static BasicAi2vParams zeros(const ModelDims& dims);

  /// Embeddings uniform in (-0.5/d, 0.5/d); every linear map Glorot-uniform
  /// with bound sqrt(6 / (fan_in + fan_out)); biases zero.
  static BasicAi2vParams init(const ModelDims& dims, Rng& rng);

  /// Visits tensors in checkpoint order: context and target embeddings,
  /// then per head key, query, value, then mix, scorer hidden, scorer
  /// output, target transform and target bias.
  template <typename F>
  void for_each_tensor(F&& f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    visit(*this, f);
  }

  template <typename U>
  BasicAi2vParams<U> cast() const;

  bool operator==(const BasicAi2vParams&) const = default;

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    f(self.context_embeddings);
    f(self.target_embeddings);
    for (auto& h : self.heads) {
      f(h.context_key);
      f(h.target_query);
      f(h.context_value);
    }
    f(self.head_mix);
    f(self.scorer.hidden);
    f(self.scorer.output);
    f(self.target_transform);
    f(self.target_bias);
  }
};

using Ai2vParams = BasicAi2vParams<float>;

template <typename T>
template <typename U>
BasicAi2vParams<U> BasicAi2vParams<T>::cast() const {
  BasicAi2vParams<U> out;
  out.dims = dims;
  out.context_embeddings = context_embeddings.template cast<U>();
  out.target_embeddings = target_embeddings.template cast<U>();
  for (const auto& h : heads) {
    out.heads.push_back({h.context_key.template cast<U>(), h.target_query.template cast<U>(),
                         h.context_value.template cast<U>()});
  }
  out.head_mix = head_mix.template cast<U>();
  out.scorer = {scorer.hidden.template cast<U>(), scorer.output.template cast<U>()};
  out.target_transform = target_transform.template cast<U>();
  out.target_bias = target_bias.template cast<U>();
  return out;
}

/// Context items projected into each head's attention space. Independent of
/// the target, so it is computed once per context and shared by candidates.
struct ContextCache {
  std::vector<Matrix<double>> keys;              // per head, L x d_a
  std::vector<std::vector<double>> key_norms;    // per head, L
};

/// Target-side projections for a whole catalog, reusable across contexts.
struct TargetCache {
  std::vector<Matrix<double>> queries;  // per head, J x d_a
  Matrix<double> transformed;           // J x d
};

struct HeadTrace {
  std::vector<double> query;   // d_a
  std::vector<double> logits;  // L cosine logits
  std::vector<double> alpha;   // L attention weights
  std::vector<double> pooled;  // d, sum_m alpha_m u_m
};

/// Forward intermediates of one candidate item.
struct CandidateTrace {
  ItemId item = 0;
  std::vector<HeadTrace> heads;
  std::vector<double> attended;  // N d, concatenated per-head attentive vectors
  std::vector<double> user;      // d, neural attentive user vector z
  std::vector<double> target;    // d, transformed target vector
  std::vector<double> features;  // 4d scorer input
  std::vector<double> hidden;    // d, pre-activation
  double score = 0.0;
};

struct ForwardTrace {
  ContextCache context;
  std::vector<CandidateTrace> candidates;  // target first, then negatives
  std::vector<double> probabilities;       // softmax over candidate scores
  double loss = 0.0;
};

template <typename T>
ContextCache project_context(const BasicAi2vParams<T>& params, std::span<const ItemId> context);

template <typename T>
TargetCache project_targets(const BasicAi2vParams<T>& params);

/// Full forward pass for one candidate. `targets` may be null.
template <typename T>
void forward_candidate(const BasicAi2vParams<T>& params, const ContextCache& cache, std::span<const ItemId> context,
                       ItemId candidate, const TargetCache* targets, CandidateTrace& out);

/// Softmax over the context of the cosine between projected context items
/// and the projected target.
template <typename T>
std::vector<double> attention_weights(const BasicAi2vParams<T>& params, std::size_t head,
                                      std::span<const ItemId> context, ItemId target);

/// value_proj applied to the attention-weighted sum of context vectors.
template <typename T>
std::vector<double> attentive_context(const BasicAi2vParams<T>& params, std::size_t head,
                                      std::span<const ItemId> context, ItemId target);

/// Target-conditioned user vector: head_mix times the concatenated heads.
template <typename T>
std::vector<double> user_vector(const BasicAi2vParams<T>& params, std::span<const ItemId> context, ItemId target);

template <typename T>
double neural_score(const NeuralScorer<T>& scorer, std::span<const double> u, std::span<const double> v);

/// scorer(z, target_transform v_target) + bias_target
template <typename T>
double similarity(const BasicAi2vParams<T>& params, std::span<const double> user, ItemId target);

/// -log softmax of the target's score over {target} + negatives. Each
/// candidate gets its own target-conditioned user vector.
template <typename T>
double sampled_softmax_loss(const BasicAi2vParams<T>& params, std::span<const ItemId> context, ItemId target,
                            std::span<const ItemId> negatives, ForwardTrace* trace = nullptr);

/// Scores every candidate for one context.
template <typename T>
std::vector<double> score_catalog(const BasicAi2vParams<T>& params, std::span<const ItemId> context,
                                  std::span<const ItemId> candidates, const TargetCache* targets = nullptr);

}  // namespace ai2v
