#include "ai2v/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ai2v {

namespace {

template <typename T>
void glorot(Matrix<T>& m, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
  for (auto& x : m.flat()) x = static_cast<T>(rng.uniform(-bound, bound));
}

// In-place max-subtracted softmax.
void softmax(std::span<double> x) {
  const double hi = *std::max_element(x.begin(), x.end());
  double sum = 0.0;
  for (auto& v : x) {
    v = std::exp(v - hi);
    sum += v;
  }
  for (auto& v : x) v /= sum;
}

void build_features(std::span<const double> u, std::span<const double> v, std::span<double> f) {
  const std::size_t d = u.size();
  for (std::size_t c = 0; c < d; ++c) {
    f[c] = u[c];
    f[d + c] = v[c];
    f[2 * d + c] = u[c] * v[c];
    f[3 * d + c] = std::abs(u[c] - v[c]);
  }
}

template <typename T>
double score_features(const NeuralScorer<T>& scorer, std::span<const double> features, std::span<double> hidden) {
  matvec(scorer.hidden, features, hidden);
  double out = 0.0;
  const auto w = scorer.output.row(0);
  for (std::size_t r = 0; r < hidden.size(); ++r) {
    if (hidden[r] > 0.0) out += static_cast<double>(w[r]) * hidden[r];
  }
  return out;
}

}  // namespace

template <typename T>
BasicAi2vParams<T> BasicAi2vParams<T>::zeros(const ModelDims& dims) {
  BasicAi2vParams p;
  p.dims = dims;
  const auto d = dims.dim, da = dims.attn_dim, n = dims.heads, j = dims.items;
  p.context_embeddings = Matrix<T>(j, d);
  p.target_embeddings = Matrix<T>(j, d);
  for (std::size_t h = 0; h < n; ++h) p.heads.push_back({Matrix<T>(da, d), Matrix<T>(da, d), Matrix<T>(d, d)});
  p.head_mix = Matrix<T>(d, n * d);
  p.scorer = {Matrix<T>(d, 4 * d), Matrix<T>(1, d)};
  p.target_transform = Matrix<T>(d, d);
  p.target_bias = Matrix<T>(j, 1);
  return p;
}

template <typename T>
BasicAi2vParams<T> BasicAi2vParams<T>::init(const ModelDims& dims, Rng& rng) {
  auto p = zeros(dims);
  const double bound = 0.5 / static_cast<double>(dims.dim);
  for (auto& x : p.context_embeddings.flat()) x = static_cast<T>(rng.uniform(-bound, bound));
  for (auto& x : p.target_embeddings.flat()) x = static_cast<T>(rng.uniform(-bound, bound));
  for (auto& h : p.heads) {
    glorot(h.context_key, rng);
    glorot(h.target_query, rng);
    glorot(h.context_value, rng);
  }
  glorot(p.head_mix, rng);
  glorot(p.scorer.hidden, rng);
  glorot(p.scorer.output, rng);
  glorot(p.target_transform, rng);
  return p;
}

template <typename T>
ContextCache project_context(const BasicAi2vParams<T>& params, std::span<const ItemId> context) {
  ContextCache cache;
  const std::size_t len = context.size();
  for (const auto& head : params.heads) {
    Matrix<double> keys(len, params.dims.attn_dim);
    std::vector<double> norms(len);
    for (std::size_t m = 0; m < len; ++m) {
      matvec(head.context_key, params.context_embeddings.row(context[m]), keys.row(m));
      norms[m] = norm2(std::span<const double>(keys.row(m)));
    }
    cache.keys.push_back(std::move(keys));
    cache.key_norms.push_back(std::move(norms));
  }
  return cache;
}

template <typename T>
TargetCache project_targets(const BasicAi2vParams<T>& params) {
  TargetCache cache;
  const auto j = params.dims.items;
  for (const auto& head : params.heads) {
    Matrix<double> q(j, params.dims.attn_dim);
    for (ItemId i = 0; i < j; ++i) matvec(head.target_query, params.target_embeddings.row(i), q.row(i));
    cache.queries.push_back(std::move(q));
  }
  cache.transformed = Matrix<double>(j, params.dims.dim);
  for (ItemId i = 0; i < j; ++i) {
    matvec(params.target_transform, params.target_embeddings.row(i), cache.transformed.row(i));
  }
  return cache;
}

template <typename T>
void forward_candidate(const BasicAi2vParams<T>& params, const ContextCache& cache, std::span<const ItemId> context,
                       ItemId candidate, const TargetCache* targets, CandidateTrace& out) {
  const std::size_t d = params.dims.dim;
  const std::size_t da = params.dims.attn_dim;
  const std::size_t n = params.heads.size();
  const std::size_t len = context.size();
  const auto v = params.target_embeddings.row(candidate);

  out.item = candidate;
  out.heads.resize(n);
  out.attended.assign(n * d, 0.0);
  for (std::size_t h = 0; h < n; ++h) {
    auto& ht = out.heads[h];
    ht.query.resize(da);
    if (targets) {
      const auto q = targets->queries[h].row(candidate);
      std::copy(q.begin(), q.end(), ht.query.begin());
    } else {
      matvec(params.heads[h].target_query, v, std::span<double>(ht.query));
    }
    const double qn = norm2(std::span<const double>(ht.query));
    ht.logits.resize(len);
    for (std::size_t m = 0; m < len; ++m) {
      const double num = dot(cache.keys[h].row(m), std::span<const double>(ht.query));
      ht.logits[m] = num / ((cache.key_norms[h][m] + kNormEpsilon) * (qn + kNormEpsilon));
    }
    ht.alpha = ht.logits;
    softmax(ht.alpha);
    ht.pooled.assign(d, 0.0);
    for (std::size_t m = 0; m < len; ++m) {
      const auto u = params.context_embeddings.row(context[m]);
      const double a = ht.alpha[m];
      for (std::size_t c = 0; c < d; ++c) ht.pooled[c] += a * static_cast<double>(u[c]);
    }
    matvec(params.heads[h].context_value, std::span<const double>(ht.pooled),
           std::span<double>(out.attended).subspan(h * d, d));
  }

  out.user.resize(d);
  matvec(params.head_mix, std::span<const double>(out.attended), std::span<double>(out.user));
  out.target.resize(d);
  if (targets) {
    const auto t = targets->transformed.row(candidate);
    std::copy(t.begin(), t.end(), out.target.begin());
  } else {
    matvec(params.target_transform, v, std::span<double>(out.target));
  }
  out.features.resize(4 * d);
  build_features(out.user, out.target, out.features);
  out.hidden.resize(d);
  out.score = score_features(params.scorer, out.features, out.hidden) +
              static_cast<double>(params.target_bias(candidate, 0));
}

namespace {

void require_context(std::span<const ItemId> context) {
  if (context.empty()) throw DataError("AI2V needs a non-empty context");
}

}  // namespace

template <typename T>
std::vector<double> attention_weights(const BasicAi2vParams<T>& params, std::size_t head,
                                      std::span<const ItemId> context, ItemId target) {
  require_context(context);
  CandidateTrace trace;
  forward_candidate(params, project_context(params, context), context, target, nullptr, trace);
  return trace.heads.at(head).alpha;
}

template <typename T>
std::vector<double> attentive_context(const BasicAi2vParams<T>& params, std::size_t head,
                                      std::span<const ItemId> context, ItemId target) {
  require_context(context);
  CandidateTrace trace;
  forward_candidate(params, project_context(params, context), context, target, nullptr, trace);
  const auto d = params.dims.dim;
  const auto begin = trace.attended.begin() + static_cast<std::ptrdiff_t>(head * d);
  return {begin, begin + static_cast<std::ptrdiff_t>(d)};
}

template <typename T>
std::vector<double> user_vector(const BasicAi2vParams<T>& params, std::span<const ItemId> context, ItemId target) {
  require_context(context);
  CandidateTrace trace;
  forward_candidate(params, project_context(params, context), context, target, nullptr, trace);
  return trace.user;
}

template <typename T>
double neural_score(const NeuralScorer<T>& scorer, std::span<const double> u, std::span<const double> v) {
  std::vector<double> features(4 * u.size());
  std::vector<double> hidden(scorer.hidden.rows());
  build_features(u, v, features);
  return score_features(scorer, features, hidden);
}

template <typename T>
double similarity(const BasicAi2vParams<T>& params, std::span<const double> user, ItemId target) {
  std::vector<double> t(params.dims.dim);
  matvec(params.target_transform, params.target_embeddings.row(target), std::span<double>(t));
  return neural_score(params.scorer, user, t) + static_cast<double>(params.target_bias(target, 0));
}

template <typename T>
double sampled_softmax_loss(const BasicAi2vParams<T>& params, std::span<const ItemId> context, ItemId target,
                            std::span<const ItemId> negatives, ForwardTrace* trace) {
  require_context(context);
  ForwardTrace local;
  ForwardTrace& tr = trace ? *trace : local;
  tr.context = project_context(params, context);
  tr.candidates.resize(negatives.size() + 1);
  forward_candidate(params, tr.context, context, target, nullptr, tr.candidates[0]);
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    forward_candidate(params, tr.context, context, negatives[k], nullptr, tr.candidates[k + 1]);
  }
  tr.probabilities.resize(tr.candidates.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : tr.candidates) hi = std::max(hi, c.score);
  double sum = 0.0;
  for (std::size_t k = 0; k < tr.candidates.size(); ++k) {
    tr.probabilities[k] = std::exp(tr.candidates[k].score - hi);
    sum += tr.probabilities[k];
  }
  for (auto& p : tr.probabilities) p /= sum;
  tr.loss = hi + std::log(sum) - tr.candidates[0].score;
  return tr.loss;
}

template <typename T>
std::vector<double> score_catalog(const BasicAi2vParams<T>& params, std::span<const ItemId> context,
                                  std::span<const ItemId> candidates, const TargetCache* targets) {
  require_context(context);
  const auto cache = project_context(params, context);
  std::vector<double> scores(candidates.size());
  CandidateTrace trace;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    forward_candidate(params, cache, context, candidates[k], targets, trace);
    scores[k] = trace.score;
  }
  return scores;
}

#define AI2V_INSTANTIATE_MODEL(T)                                                                                  \
  template struct BasicAi2vParams<T>;                                                                              \
  template ContextCache project_context(const BasicAi2vParams<T>&, std::span<const ItemId>);                       \
  template TargetCache project_targets(const BasicAi2vParams<T>&);                                                 \
  template void forward_candidate(const BasicAi2vParams<T>&, const ContextCache&, std::span<const ItemId>, ItemId, \
                                  const TargetCache*, CandidateTrace&);                                            \
  template std::vector<double> attention_weights(const BasicAi2vParams<T>&, std::size_t, std::span<const ItemId>,  \
                                                 ItemId);                                                          \
  template std::vector<double> attentive_context(const BasicAi2vParams<T>&, std::size_t, std::span<const ItemId>,  \
                                                 ItemId);                                                          \
  template std::vector<double> user_vector(const BasicAi2vParams<T>&, std::span<const ItemId>, ItemId);            \
  template double neural_score(const NeuralScorer<T>&, std::span<const double>, std::span<const double>);          \
  template double similarity(const BasicAi2vParams<T>&, std::span<const double>, ItemId);                          \
  template double sampled_softmax_loss(const BasicAi2vParams<T>&, std::span<const ItemId>, ItemId,                 \
                                       std::span<const ItemId>, ForwardTrace*);                                    \
  template std::vector<double> score_catalog(const BasicAi2vParams<T>&, std::span<const ItemId>,                   \
                                             std::span<const ItemId>, const TargetCache*);

AI2V_INSTANTIATE_MODEL(float)
AI2V_INSTANTIATE_MODEL(double)

}  // namespace ai2v
