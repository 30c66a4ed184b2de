#include "support/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ai2v::testing {

HistorySet planted_clusters(std::size_t users, std::size_t items, std::size_t clusters, std::size_t per_user,
                            std::uint64_t seed) {
  const std::size_t size = items / clusters;
  HistorySet set;
  for (std::size_t i = 0; i < items; ++i) set.vocab.add("i" + std::to_string(i));
  Rng rng(seed);
  for (std::size_t u = 0; u < users; ++u) {
    const auto c = rng.below(clusters);
    std::vector<ItemId> members(size);
    for (std::size_t k = 0; k < size; ++k) members[k] = static_cast<ItemId>(c * size + k);
    rng.shuffle(members);
    members.resize(std::min(per_user, size));
    UserHistory h{"u" + std::to_string(u), members, {}};
    for (std::size_t k = 0; k < members.size(); ++k) h.timestamps.push_back(static_cast<std::int64_t>(k));
    set.users.push_back(std::move(h));
  }
  return set;
}

std::string ratings_like(const RatingsLikeOptions& o) {
  Rng rng(o.seed);
  const std::size_t per_genre = o.items / o.genres;

  // Zipf weights within a genre; genres themselves differ in size of audience.
  std::vector<double> zipf(per_genre);
  for (std::size_t k = 0; k < per_genre; ++k) zipf[k] = 1.0 / std::pow(static_cast<double>(k + 1), 0.9);
  std::vector<double> genre_weight(o.genres);
  for (std::size_t g = 0; g < o.genres; ++g) genre_weight[g] = 1.0 / std::sqrt(static_cast<double>(g + 1));

  auto pick = [&](const std::vector<double>& w) {
    double total = 0.0;
    for (double x : w) total += x;
    double r = rng.uniform() * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
      r -= w[i];
      if (r < 0.0) return i;
    }
    return w.size() - 1;
  };

  std::ostringstream out;
  std::int64_t clock = 978300000;
  for (std::size_t u = 0; u < o.users; ++u) {
    const std::size_t n_genres = 2 + rng.below(2);
    std::vector<std::size_t> genres;
    while (genres.size() < n_genres) {
      const auto g = pick(genre_weight);
      if (std::find(genres.begin(), genres.end(), g) == genres.end()) genres.push_back(g);
    }
    std::vector<double> mix(n_genres);
    for (auto& m : mix) m = 0.2 + rng.uniform();

    const std::size_t n_events = o.min_events + rng.below(o.max_events - o.min_events + 1);
    std::vector<bool> seen(o.items, false);
    std::int64_t t = clock + static_cast<std::int64_t>(rng.below(100000));
    for (std::size_t e = 0; e < n_events; ++e) {
      std::size_t item = 0;
      double rating = 0.0;
      if (rng.uniform() < o.dislike_rate) {
        item = rng.below(o.items);
        rating = static_cast<double>(1 + rng.below(3));
      } else {
        const auto g = genres[pick(mix)];
        item = g * per_genre + pick(zipf);
        rating = rng.uniform() < 0.5 ? 4.0 : 5.0;
      }
      if (seen[item]) continue;
      seen[item] = true;
      t += 60 + static_cast<std::int64_t>(rng.below(86400));
      out << (u + 1) << "::" << (item + 1) << "::" << rating << "::" << t << '\n';
    }
  }
  return out.str();
}

BasicAi2vParams<double> random_params(const ModelDims& dims, std::uint64_t seed) {
  Rng rng(seed);
  auto p = BasicAi2vParams<double>::init(dims, rng);
  auto fill = [&](Matrix<double>& m, double bound) {
    for (auto& x : m.flat()) x = rng.uniform(-bound, bound);
  };
  fill(p.context_embeddings, 1.0);
  fill(p.target_embeddings, 1.0);
  fill(p.target_bias, 1.0);
  return p;
}

std::vector<ItemId> random_items(std::size_t n, std::size_t items, Rng& rng) {
  std::vector<ItemId> out(n);
  for (auto& x : out) x = static_cast<ItemId>(rng.below(items));
  return out;
}

}  // namespace ai2v::testing
