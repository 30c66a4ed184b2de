#include "ai2v/i2v.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ai2v/sampler.hpp"

namespace ai2v {

namespace {

double log_sigmoid(double x) { return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double clamp_logit(double s) { return std::clamp(s, -kLogitClamp, kLogitClamp); }

bool saturated(double s) { return s <= -kLogitClamp || s >= kLogitClamp; }

}  // namespace

template <typename T>
double sgns_pair_loss(const BasicI2vParams<T>& params, ItemId context, ItemId target, std::span<const ItemId> negatives) {
  const auto u = params.context.row(context);
  double loss = -log_sigmoid(clamp_logit(dot(u, params.target.row(target))));
  for (ItemId k : negatives) loss -= log_sigmoid(-clamp_logit(dot(u, params.target.row(k))));
  return loss;
}

template <typename T>
double sgns_accumulate(const BasicI2vParams<T>& params, ItemId context, ItemId target,
                       std::span<const ItemId> negatives, I2vGradients& grads) {
  const std::size_t d = params.dim();
  const auto u = params.context.row(context);
  std::vector<double> du(d, 0.0);
  double loss = 0.0;

  // dL/ds is sigma(s) - 1 for the positive and sigma(s) for a negative; zero
  // once the clamp is active.
  auto visit = [&](ItemId item, bool positive) {
    const auto v = params.target.row(item);
    const double s = dot(u, v);
    const double sc = clamp_logit(s);
    loss -= log_sigmoid(positive ? sc : -sc);
    if (saturated(s)) return;
    const double g = positive ? sigmoid(sc) - 1.0 : sigmoid(sc);
    auto dv = grads.target.row(item);
    for (std::size_t c = 0; c < d; ++c) {
      du[c] += g * static_cast<double>(v[c]);
      dv[c] += g * static_cast<double>(u[c]);
    }
  };
  visit(target, true);
  for (ItemId k : negatives) visit(k, false);

  auto dst = grads.context.row(context);
  for (std::size_t c = 0; c < d; ++c) dst[c] += du[c];
  return loss;
}

template <typename T>
void adagrad_step(BasicI2vParams<T>& params, const I2vGradients& grads, AdagradState<BasicI2vParams<T>>& state) {
  adagrad_sparse(params.context, state.accum.context, grads.context, state.lr, state.eps);
  adagrad_sparse(params.target, state.accum.target, grads.target, state.lr, state.eps);
}

template <typename T>
double sgns_step(BasicI2vParams<T>& params, ItemId context, ItemId target, std::span<const ItemId> negatives,
                 AdagradState<BasicI2vParams<T>>& state) {
  I2vGradients grads(params.dim());
  const double loss = sgns_accumulate(params, context, target, negatives, grads);
  adagrad_step(params, grads, state);
  return loss;
}

std::vector<std::pair<ItemId, ItemId>> ordered_pairs(std::span<const ItemId> history) {
  std::vector<std::pair<ItemId, ItemId>> out;
  if (history.size() < 2) return out;
  out.reserve(history.size() * (history.size() - 1));
  for (std::size_t i = 0; i < history.size(); ++i) {
    for (std::size_t j = 0; j < history.size(); ++j) {
      if (i != j) out.emplace_back(history[i], history[j]);
    }
  }
  return out;
}

I2vTrainResult train_i2v(const CorpusSplit& split, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const std::size_t items = split.num_items();
  Rng init_rng = Rng::stream(config.seed, "init");
  I2vTrainResult result{I2vParams::init(items, config.dim, init_rng),
                        {I2vParams::zeros(items, config.dim), config.lr, config.adagrad_eps},
                        {}};
  if (config.epochs == 0) return result;

  const auto counts = training_item_counts(split);
  const UnigramTable table(counts, config.unigram_power);
  const SubsampleRule subsample(counts, config.subsample);

  Rng shuffle_rng = Rng::stream(config.seed, "shuffle");
  Rng negative_rng = Rng::stream(config.seed, "negatives");
  Rng subsample_rng = Rng::stream(config.seed, "subsample");

  std::vector<std::uint32_t> order(split.users.size());
  std::iota(order.begin(), order.end(), 0u);
  I2vGradients grads(config.dim);
  std::vector<ItemId> negs(config.negatives);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t pairs = 0;
    std::size_t in_batch = 0;
    for (auto u : order) {
      const auto training = split.users[u].training_items();
      const auto history = config.subsample > 0.0 ? subsample.apply(training, subsample_rng)
                                                  : std::vector<ItemId>(training.begin(), training.end());
      for (const auto& [context, target] : ordered_pairs(history)) {
        sample_negatives(table, target, negative_rng, negs);
        loss_sum += sgns_accumulate(result.params, context, target, negs, grads);
        ++pairs;
        if (++in_batch == config.minibatch) {
          adagrad_step(result.params, grads, result.state);
          grads.clear();
          in_batch = 0;
        }
      }
    }
    if (in_batch > 0) {
      adagrad_step(result.params, grads, result.state);
      grads.clear();
      in_batch = 0;
    }
    const double mean = pairs > 0 ? loss_sum / static_cast<double>(pairs) : 0.0;
    result.epoch_loss.push_back(mean);
    if (on_epoch) on_epoch(epoch, mean);
  }
  return result;
}

template <typename T>
std::vector<double> i2v_user_vector(const BasicI2vParams<T>& params, std::span<const ItemId> context) {
  if (context.empty()) throw DataError("i2v user vector needs a non-empty context");
  std::vector<double> mean(params.dim(), 0.0);
  for (ItemId i : context) {
    const auto u = params.context.row(i);
    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += static_cast<double>(u[c]);
  }
  for (auto& x : mean) x /= static_cast<double>(context.size());
  return mean;
}

#define AI2V_INSTANTIATE_I2V(T)                                                                                   \
  template double sgns_pair_loss(const BasicI2vParams<T>&, ItemId, ItemId, std::span<const ItemId>);              \
  template double sgns_accumulate(const BasicI2vParams<T>&, ItemId, ItemId, std::span<const ItemId>,              \
                                  I2vGradients&);                                                                 \
  template void adagrad_step(BasicI2vParams<T>&, const I2vGradients&, AdagradState<BasicI2vParams<T>>&);          \
  template double sgns_step(BasicI2vParams<T>&, ItemId, ItemId, std::span<const ItemId>,                          \
                            AdagradState<BasicI2vParams<T>>&);                                                    \
  template std::vector<double> i2v_user_vector(const BasicI2vParams<T>&, std::span<const ItemId>);

AI2V_INSTANTIATE_I2V(float)
AI2V_INSTANTIATE_I2V(double)

}  // namespace ai2v
