#include "ai2v/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ai2v/sampler.hpp"

namespace ai2v {

GradientSet GradientSet::zeros(const ModelDims& dims) {
  GradientSet g;
  g.dims = dims;
  const auto d = dims.dim, da = dims.attn_dim;
  g.context_embeddings = SparseRows(d);
  g.target_embeddings = SparseRows(d);
  g.target_bias = SparseRows(1);
  for (std::size_t h = 0; h < dims.heads; ++h) {
    g.heads.push_back({Matrix<double>(da, d), Matrix<double>(da, d), Matrix<double>(d, d)});
  }
  g.head_mix = Matrix<double>(d, dims.heads * d);
  g.scorer_hidden = Matrix<double>(d, 4 * d);
  g.scorer_output = Matrix<double>(1, d);
  g.target_transform = Matrix<double>(d, d);
  return g;
}

void GradientSet::clear() {
  context_embeddings.clear();
  target_embeddings.clear();
  target_bias.clear();
  for (auto& h : heads) {
    h.context_key.fill(0.0);
    h.target_query.fill(0.0);
    h.context_value.fill(0.0);
  }
  head_mix.fill(0.0);
  scorer_hidden.fill(0.0);
  scorer_output.fill(0.0);
  target_transform.fill(0.0);
}

namespace {

void add_into(Matrix<double>& dst, const Matrix<double>& src) {
  auto d = dst.flat();
  auto s = src.flat();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

Matrix<double> densify(const SparseRows& rows, std::size_t n) {
  Matrix<double> m(n, rows.dim());
  for (std::size_t slot = 0; slot < rows.rows(); ++slot) {
    auto src = rows.values(slot);
    std::copy(src.begin(), src.end(), m.row(rows.ids()[slot]).begin());
  }
  return m;
}

}  // namespace

void GradientSet::add(const GradientSet& other) {
  context_embeddings.add(other.context_embeddings);
  target_embeddings.add(other.target_embeddings);
  target_bias.add(other.target_bias);
  for (std::size_t h = 0; h < heads.size(); ++h) {
    add_into(heads[h].context_key, other.heads[h].context_key);
    add_into(heads[h].target_query, other.heads[h].target_query);
    add_into(heads[h].context_value, other.heads[h].context_value);
  }
  add_into(head_mix, other.head_mix);
  add_into(scorer_hidden, other.scorer_hidden);
  add_into(scorer_output, other.scorer_output);
  add_into(target_transform, other.target_transform);
}

std::vector<Matrix<double>> GradientSet::to_dense() const {
  std::vector<Matrix<double>> out;
  out.push_back(densify(context_embeddings, dims.items));
  out.push_back(densify(target_embeddings, dims.items));
  for (const auto& h : heads) {
    out.push_back(h.context_key);
    out.push_back(h.target_query);
    out.push_back(h.context_value);
  }
  out.push_back(head_mix);
  out.push_back(scorer_hidden);
  out.push_back(scorer_output);
  out.push_back(target_transform);
  out.push_back(densify(target_bias, dims.items));
  return out;
}

template <typename T>
double accumulate_backward(const BasicAi2vParams<T>& params, std::span<const ItemId> context, ItemId target,
                           std::span<const ItemId> negatives, GradientSet& grads) {
  ForwardTrace trace;
  const double loss = sampled_softmax_loss(params, context, target, negatives, &trace);

  const std::size_t d = params.dims.dim;
  const std::size_t da = params.dims.attn_dim;
  const std::size_t n = params.heads.size();
  const std::size_t len = context.size();

  // Upstream gradients w.r.t. the projected context keys, summed over candidates.
  std::vector<Matrix<double>> d_keys(n, Matrix<double>(len, da));
  // Gradients w.r.t. each context position's embedding, folded into rows at the end.
  Matrix<double> d_context(len, d);

  std::vector<double> d_hidden(d), d_features(4 * d), d_user(d), d_target(d), d_attended(n * d);
  std::vector<double> d_pooled(d), d_alpha(len), d_logit(len), d_query(da), d_vec(d);

  const auto w_out = params.scorer.output.row(0);

  for (std::size_t k = 0; k < trace.candidates.size(); ++k) {
    const CandidateTrace& cand = trace.candidates[k];
    // d loss / d score = softmax probability - [candidate is the target]
    const double g = trace.probabilities[k] - (k == 0 ? 1.0 : 0.0);
    const ItemId item = cand.item;
    const auto v = params.target_embeddings.row(item);

    grads.target_bias.row(item)[0] += g;

    // Scorer: score = w_out . relu(hidden), hidden = W_hidden features.
    for (std::size_t r = 0; r < d; ++r) {
      const bool active = cand.hidden[r] > 0.0;
      grads.scorer_output(0, r) += active ? g * cand.hidden[r] : 0.0;
      d_hidden[r] = active ? g * static_cast<double>(w_out[r]) : 0.0;
    }
    outer_add(grads.scorer_hidden, d_hidden, std::span<const double>(cand.features));
    std::fill(d_features.begin(), d_features.end(), 0.0);
    matvec_transpose_add(params.scorer.hidden, d_hidden, d_features);

    // features = [z; t; z*t; |z - t|]
    for (std::size_t c = 0; c < d; ++c) {
      const double z = cand.user[c];
      const double t = cand.target[c];
      const double sgn = z > t ? 1.0 : (z < t ? -1.0 : 0.0);
      d_user[c] = d_features[c] + d_features[2 * d + c] * t + d_features[3 * d + c] * sgn;
      d_target[c] = d_features[d + c] + d_features[2 * d + c] * z - d_features[3 * d + c] * sgn;
    }

    // t = target_transform v
    std::fill(d_vec.begin(), d_vec.end(), 0.0);
    outer_add(grads.target_transform, d_target, v);
    matvec_transpose_add(params.target_transform, d_target, d_vec);

    // z = head_mix w
    outer_add(grads.head_mix, d_user, std::span<const double>(cand.attended));
    std::fill(d_attended.begin(), d_attended.end(), 0.0);
    matvec_transpose_add(params.head_mix, d_user, d_attended);

    for (std::size_t h = 0; h < n; ++h) {
      const auto& head = params.heads[h];
      const HeadTrace& ht = cand.heads[h];
      const std::span<const double> d_a = std::span<const double>(d_attended).subspan(h * d, d);

      // a = context_value pooled
      outer_add(grads.heads[h].context_value, d_a, std::span<const double>(ht.pooled));
      std::fill(d_pooled.begin(), d_pooled.end(), 0.0);
      matvec_transpose_add(head.context_value, d_a, d_pooled);

      // pooled = sum_m alpha_m u_m
      double weighted = 0.0;
      for (std::size_t m = 0; m < len; ++m) {
        const auto u = params.context_embeddings.row(context[m]);
        auto du = d_context.row(m);
        for (std::size_t c = 0; c < d; ++c) du[c] += ht.alpha[m] * d_pooled[c];
        d_alpha[m] = dot(u, std::span<const double>(d_pooled));
        weighted += ht.alpha[m] * d_alpha[m];
      }
      // softmax
      for (std::size_t m = 0; m < len; ++m) d_logit[m] = ht.alpha[m] * (d_alpha[m] - weighted);

      // logit_m = key_m . q / ((|key_m| + eps)(|q| + eps))
      const std::span<const double> q(ht.query);
      const double qn = norm2(q);
      const double dq_den = qn + kNormEpsilon;
      std::fill(d_query.begin(), d_query.end(), 0.0);
      for (std::size_t m = 0; m < len; ++m) {
        if (d_logit[m] == 0.0) continue;
        const auto key = trace.context.keys[h].row(m);
        const double kn = trace.context.key_norms[h][m];
        const double dk_den = kn + kNormEpsilon;
        const double num = dot(key, q);
        const double inv = 1.0 / (dk_den * dq_den);
        const double key_coef = kn > 0.0 ? -num * inv / (dk_den * kn) : 0.0;
        const double q_coef = qn > 0.0 ? -num * inv / (dq_den * qn) : 0.0;
        auto dkey = d_keys[h].row(m);
        for (std::size_t c = 0; c < da; ++c) {
          dkey[c] += d_logit[m] * (q[c] * inv + key_coef * key[c]);
          d_query[c] += d_logit[m] * (key[c] * inv + q_coef * q[c]);
        }
      }

      // q = target_query v
      outer_add(grads.heads[h].target_query, std::span<const double>(d_query), v);
      matvec_transpose_add(head.target_query, d_query, d_vec);
    }

    auto dv = grads.target_embeddings.row(item);
    for (std::size_t c = 0; c < d; ++c) dv[c] += d_vec[c];
  }

  // key_m = context_key u_m, once per context position.
  for (std::size_t h = 0; h < n; ++h) {
    for (std::size_t m = 0; m < len; ++m) {
      const auto u = params.context_embeddings.row(context[m]);
      const std::span<const double> dkey = d_keys[h].row(m);
      outer_add(grads.heads[h].context_key, dkey, u);
      matvec_transpose_add(params.heads[h].context_key, dkey, d_context.row(m));
    }
  }
  for (std::size_t m = 0; m < len; ++m) {
    auto row = grads.context_embeddings.row(context[m]);
    const auto src = d_context.row(m);
    for (std::size_t c = 0; c < d; ++c) row[c] += src[c];
  }
  return loss;
}

template <typename T>
std::pair<double, GradientSet> backward(const BasicAi2vParams<T>& params, const TrainExample& example,
                                        std::span<const ItemId> negatives) {
  auto grads = GradientSet::zeros(params.dims);
  const double loss = accumulate_backward(params, example.context(), example.target, negatives, grads);
  return {loss, std::move(grads)};
}

template <typename T>
void adagrad_step(BasicAi2vParams<T>& params, const GradientSet& grads, AdagradState<BasicAi2vParams<T>>& state) {
  auto& acc = state.accum;
  const double lr = state.lr, eps = state.eps;
  adagrad_sparse(params.context_embeddings, acc.context_embeddings, grads.context_embeddings, lr, eps);
  adagrad_sparse(params.target_embeddings, acc.target_embeddings, grads.target_embeddings, lr, eps);
  for (std::size_t h = 0; h < params.heads.size(); ++h) {
    adagrad_dense(params.heads[h].context_key, acc.heads[h].context_key, grads.heads[h].context_key, lr, eps);
    adagrad_dense(params.heads[h].target_query, acc.heads[h].target_query, grads.heads[h].target_query, lr, eps);
    adagrad_dense(params.heads[h].context_value, acc.heads[h].context_value, grads.heads[h].context_value, lr, eps);
  }
  adagrad_dense(params.head_mix, acc.head_mix, grads.head_mix, lr, eps);
  adagrad_dense(params.scorer.hidden, acc.scorer.hidden, grads.scorer_hidden, lr, eps);
  adagrad_dense(params.scorer.output, acc.scorer.output, grads.scorer_output, lr, eps);
  adagrad_dense(params.target_transform, acc.target_transform, grads.target_transform, lr, eps);
  adagrad_sparse(params.target_bias, acc.target_bias, grads.target_bias, lr, eps);
}

FiniteDiffResult finite_diff_check(const BasicAi2vParams<double>& params, std::span<const ItemId> context,
                                   ItemId target, std::span<const ItemId> negatives, double eps, Rng& rng,
                                   std::size_t min_coordinates) {
  auto grads = GradientSet::zeros(params.dims);
  const double base = accumulate_backward(params, context, target, negatives, grads);
  if (!std::isfinite(base)) throw DataError("finite-difference check: non-finite loss");
  const auto analytic = grads.to_dense();

  BasicAi2vParams<double> probe = params;
  std::vector<Matrix<double>*> tensors;
  probe.for_each_tensor([&](Matrix<double>& m) { tensors.push_back(&m); });

  // Rows of the embedding and bias tensors that the loss depends on.
  std::vector<ItemId> touched(context.begin(), context.end());
  touched.push_back(target);
  touched.insert(touched.end(), negatives.begin(), negatives.end());
  const std::size_t bias_index = tensors.size() - 1;
  auto row_sparse = [&](std::size_t t) { return t == 0 || t == 1 || t == bias_index; };

  const std::size_t per_tensor = (min_coordinates + tensors.size() - 1) / tensors.size();
  FiniteDiffResult result;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Matrix<double>& m = *tensors[t];
    const std::size_t cols = m.cols();
    for (std::size_t s = 0; s < per_tensor; ++s) {
      std::size_t r, c;
      if (row_sparse(t)) {
        r = touched[rng.below(touched.size())];
        c = rng.below(cols);
      } else {
        const auto flat = rng.below(m.size());
        r = flat / cols;
        c = flat % cols;
      }
      const double saved = m(r, c);
      m(r, c) = saved + eps;
      const double plus = sampled_softmax_loss(probe, context, target, negatives);
      m(r, c) = saved - eps;
      const double minus = sampled_softmax_loss(probe, context, target, negatives);
      m(r, c) = saved;
      if (!std::isfinite(plus) || !std::isfinite(minus)) throw DataError("finite-difference check: non-finite loss");

      const double numeric = (plus - minus) / (2.0 * eps);
      const double a = analytic[t](r, c);
      double err = 0.0;
      if (std::abs(a) >= 1e-8 || std::abs(numeric) >= 1e-8) err = std::abs(a - numeric) / std::max(std::abs(a), 1e-8);
      result.max_rel_error = std::max(result.max_rel_error, err);
      ++result.coordinates;
    }
  }
  return result;
}

template <typename T>
double minibatch_gradient(const BasicAi2vParams<T>& params, std::span<const TrainExample> examples,
                          std::span<const std::vector<ItemId>> negatives, std::size_t context_cap, unsigned threads,
                          GradientSet& out) {
  std::vector<GradientSet> per_example(examples.size(), GradientSet::zeros(params.dims));
  std::vector<double> losses(examples.size(), 0.0);
  parallel_for(examples.size(), threads, [&](std::size_t i) {
    losses[i] = accumulate_backward(params, capped_context(examples[i].context(), context_cap), examples[i].target,
                                    negatives[i], per_example[i]);
  });
  double total = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out.add(per_example[i]);
    total += losses[i];
  }
  return total;
}

ModelDims model_dims(std::size_t items, const TrainConfig& config) {
  return {items, config.dim, config.attn_dim, config.heads};
}

Ai2vParams initial_params(std::size_t items, const TrainConfig& config) {
  Rng rng = Rng::stream(config.seed, "init");
  return Ai2vParams::init(model_dims(items, config), rng);
}

Ai2vTrainResult fit(const CorpusSplit& split, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto dims = model_dims(split.num_items(), config);
  Ai2vTrainResult result{initial_params(split.num_items(), config),
                         {Ai2vParams::zeros(dims), config.lr, config.adagrad_eps},
                         {}};
  if (config.epochs == 0) return result;
  if (split.train.empty()) throw DataError("AI2V training needs at least one training example");

  const UnigramTable table(training_item_counts(split), config.unigram_power);
  Rng shuffle_rng = Rng::stream(config.seed, "shuffle");
  Rng negative_rng = Rng::stream(config.seed, "negatives");

  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::size_t batch_cap = config.minibatch;
  std::vector<GradientSet> slots(batch_cap, GradientSet::zeros(dims));
  std::vector<std::vector<ItemId>> negs(batch_cap, std::vector<ItemId>(config.negatives));
  std::vector<double> losses(batch_cap);
  GradientSet batch = GradientSet::zeros(dims);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch_cap) {
      const std::size_t count = std::min(batch_cap, order.size() - begin);
      // Negatives are drawn sequentially so the stream does not depend on threads.
      for (std::size_t k = 0; k < count; ++k) {
        sample_negatives(table, split.train[order[begin + k]].target, negative_rng, negs[k]);
      }
      parallel_for(count, config.threads, [&](std::size_t k) {
        const auto& ex = split.train[order[begin + k]];
        slots[k].clear();
        losses[k] = accumulate_backward(result.params, capped_context(ex.context(), config.context_cap), ex.target,
                                        negs[k], slots[k]);
      });
      batch.clear();
      for (std::size_t k = 0; k < count; ++k) {
        batch.add(slots[k]);
        loss_sum += losses[k];
      }
      adagrad_step(result.params, batch, result.state);
    }
    const double mean = loss_sum / static_cast<double>(order.size());
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

#define AI2V_INSTANTIATE_TRAIN(T)                                                                                \
  template double accumulate_backward(const BasicAi2vParams<T>&, std::span<const ItemId>, ItemId,                \
                                      std::span<const ItemId>, GradientSet&);                                    \
  template std::pair<double, GradientSet> backward(const BasicAi2vParams<T>&, const TrainExample&,               \
                                                   std::span<const ItemId>);                                     \
  template void adagrad_step(BasicAi2vParams<T>&, const GradientSet&, AdagradState<BasicAi2vParams<T>>&);        \
  template double minibatch_gradient(const BasicAi2vParams<T>&, std::span<const TrainExample>,                   \
                                     std::span<const std::vector<ItemId>>, std::size_t, unsigned, GradientSet&);

AI2V_INSTANTIATE_TRAIN(float)
AI2V_INSTANTIATE_TRAIN(double)

}  // namespace ai2v
