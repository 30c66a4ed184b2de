#include "ai2v/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

namespace ai2v {

namespace {

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> out;
  if (delim.empty()) {
    out.push_back(line);
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Enumerates the prefix examples of every user and fills popularity.
CorpusSplit assemble(ItemVocab vocab, std::vector<SplitUser> users) {
  CorpusSplit split;
  split.vocab = std::move(vocab);
  split.users = std::move(users);
  for (std::uint32_t u = 0; u < split.users.size(); ++u) {
    const auto& user = split.users[u];
    const auto& items = *user.items;
    for (std::size_t pos = 1; pos < items.size(); ++pos) {
      TrainExample ex{user.items, u, static_cast<std::uint32_t>(pos), items[pos]};
      (pos < user.boundary ? split.train : split.test).push_back(std::move(ex));
    }
  }
  split.train_popularity.assign(split.vocab.size(), 0);
  for (const auto& ex : split.train) {
    for (ItemId c : ex.context()) ++split.train_popularity[c];
    ++split.train_popularity[ex.target];
  }
  return split;
}

std::vector<SplitUser> share_histories(const HistorySet& histories) {
  std::vector<SplitUser> users;
  users.reserve(histories.users.size());
  for (const auto& h : histories.users) {
    users.push_back({h.user, std::make_shared<const std::vector<ItemId>>(h.items), h.items.size()});
  }
  return users;
}

}  // namespace

RatingFormat RatingFormat::movielens() {
  RatingFormat f;
  f.delimiter = "::";
  return f;
}

RatingFormat RatingFormat::yahoo() { return RatingFormat{}; }

RatingFormat RatingFormat::generic() { return RatingFormat{}; }

LoadResult parse_ratings(std::istream& in, const RatingFormat& format) {
  LoadResult result;
  const int needed = std::max({format.user_column, format.item_column, format.rating_column,
                               format.has_timestamp ? format.timestamp_column : 0}) + 1;
  std::string line;
  while (std::getline(in, line)) {
    std::string_view view = trim(line);
    if (view.empty()) continue;
    const auto fields = split_fields(view, format.delimiter);
    if (static_cast<int>(fields.size()) < std::max(needed, 3)) {
      ++result.rejected;
      continue;
    }
    const auto rating = parse_number<double>(fields[format.rating_column]);
    if (!rating || !std::isfinite(*rating)) {
      ++result.rejected;
      continue;
    }
    RatingEvent ev;
    ev.user = std::string(trim(fields[format.user_column]));
    ev.item = std::string(trim(fields[format.item_column]));
    ev.rating = *rating;
    if (format.has_timestamp) {
      const auto ts = parse_number<std::int64_t>(fields[format.timestamp_column]);
      if (!ts || *ts < 0) {
        ++result.rejected;
        continue;
      }
      ev.timestamp = *ts;
    }
    if (ev.user.empty() || ev.item.empty()) {
      ++result.rejected;
      continue;
    }
    result.events.push_back(std::move(ev));
  }
  return result;
}

LoadResult load_ratings(const std::string& path, const RatingFormat& format) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read ratings file: " + path);
  return parse_ratings(in, format);
}

PositivityRule PositivityRule::movielens(double threshold) {
  return {Kind::kAbove, threshold, 0.0};
}

PositivityRule PositivityRule::yahoo(double threshold, double excluded) {
  return {Kind::kAtLeastExcept, threshold, excluded};
}

PositivityRule PositivityRule::none() { return {}; }

bool PositivityRule::accepts(double rating) const {
  switch (kind) {
    case Kind::kAll:
      return true;
    case Kind::kAbove:
      return rating > threshold;
    case Kind::kAtLeastExcept:
      return rating >= threshold && rating != excluded;
  }
  return false;
}

ItemId ItemVocab::add(const std::string& external) {
  const auto [it, inserted] = index_.try_emplace(external, static_cast<ItemId>(ids_.size()));
  if (inserted) ids_.push_back(external);
  return it->second;
}

std::optional<ItemId> ItemVocab::find(const std::string& external) const {
  const auto it = index_.find(external);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

HistorySet build_histories(std::span<const RatingEvent> events, const PositivityRule& rule,
                           std::size_t min_len) {
  std::unordered_map<std::string, std::size_t> user_slot;
  std::vector<std::vector<std::size_t>> per_user;  // event indices in file order
  std::vector<std::string> user_ids;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto [it, inserted] = user_slot.try_emplace(events[i].user, per_user.size());
    if (inserted) {
      per_user.emplace_back();
      user_ids.push_back(events[i].user);
    }
    per_user[it->second].push_back(i);
  }

  HistorySet out;
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto& idx = per_user[u];
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return events[a].timestamp.value_or(0) < events[b].timestamp.value_or(0);
    });
    std::vector<std::size_t> kept;
    for (std::size_t i : idx) {
      if (rule.accepts(events[i].rating)) kept.push_back(i);
    }
    if (kept.size() < min_len || kept.empty()) continue;
    UserHistory h;
    h.user = user_ids[u];
    const bool timed = std::all_of(kept.begin(), kept.end(), [&](std::size_t i) { return events[i].timestamp.has_value(); });
    for (std::size_t i : kept) {
      h.items.push_back(out.vocab.add(events[i].item));
      if (timed) h.timestamps.push_back(*events[i].timestamp);
    }
    out.users.push_back(std::move(h));
  }
  return out;
}

std::vector<RatingEvent> sample_catalog(std::span<const RatingEvent> events, std::size_t max_users,
                                        std::size_t max_items, std::uint64_t seed) {
  auto reservoir = [&](auto key_of, std::size_t capacity, std::string_view stream) {
    std::unordered_set<std::string> seen;
    std::vector<std::string> kept;
    Rng rng = Rng::stream(seed, stream);
    std::size_t n = 0;
    for (const auto& ev : events) {
      const std::string& key = key_of(ev);
      if (!seen.insert(key).second) continue;
      if (kept.size() < capacity) {
        kept.push_back(key);
      } else {
        const auto j = rng.below(n + 1);
        if (j < capacity) kept[j] = key;
      }
      ++n;
    }
    return std::unordered_set<std::string>(kept.begin(), kept.end());
  };

  const bool all_users = max_users == 0;
  const bool all_items = max_items == 0;
  const auto users = all_users ? std::unordered_set<std::string>{}
                               : reservoir([](const RatingEvent& e) -> const std::string& { return e.user; }, max_users,
                                           "sample-users");
  const auto items = all_items ? std::unordered_set<std::string>{}
                               : reservoir([](const RatingEvent& e) -> const std::string& { return e.item; }, max_items,
                                           "sample-items");
  std::vector<RatingEvent> out;
  for (const auto& ev : events) {
    if ((all_users || users.contains(ev.user)) && (all_items || items.contains(ev.item))) out.push_back(ev);
  }
  return out;
}

TrainExample TrainExample::make(std::vector<ItemId> context, ItemId target, std::uint32_t user) {
  const auto length = static_cast<std::uint32_t>(context.size());
  context.push_back(target);
  return {std::make_shared<const std::vector<ItemId>>(std::move(context)), user, length, target};
}

CorpusSplit split_leave_last(const HistorySet& histories) {
  auto users = share_histories(histories);
  for (auto& u : users) {
    if (u.items->size() < 2) throw DataError("user " + u.id + " has fewer than two items");
    u.boundary = u.items->size() - 1;
  }
  return assemble(histories.vocab, std::move(users));
}

CorpusSplit split_by_time(const HistorySet& histories, std::int64_t cutoff) {
  auto users = share_histories(histories);
  for (std::size_t i = 0; i < users.size(); ++i) {
    const auto& ts = histories.users[i].timestamps;
    if (ts.size() != users[i].items->size()) {
      throw DataError("temporal split needs timestamps; user " + users[i].id + " has none");
    }
    users[i].boundary = static_cast<std::size_t>(std::lower_bound(ts.begin(), ts.end(), cutoff) - ts.begin());
  }
  return assemble(histories.vocab, std::move(users));
}

namespace {

std::vector<ItemId> most_popular(const std::vector<std::uint64_t>& popularity, std::size_t n_top) {
  std::vector<ItemId> order(popularity.size());
  std::iota(order.begin(), order.end(), ItemId{0});
  n_top = std::min(n_top, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_top), order.end(),
                    [&](ItemId a, ItemId b) {
                      if (popularity[a] != popularity[b]) return popularity[a] > popularity[b];
                      return a < b;
                    });
  order.resize(n_top);
  // Items absent from training have no popularity to rank by.
  std::erase_if(order, [&](ItemId i) { return popularity[i] == 0; });
  std::sort(order.begin(), order.end());
  return order;
}

void drop_targets(CorpusSplit& split, const std::vector<ItemId>& removed) {
  std::vector<bool> mask(split.num_items(), false);
  for (ItemId i : removed) mask[i] = true;
  std::erase_if(split.test, [&](const TrainExample& ex) { return mask[ex.target]; });
}

}  // namespace

CorpusSplit filter_popular_test(CorpusSplit split, std::size_t n_top) {
  const auto removed = most_popular(split.train_popularity, n_top);
  drop_targets(split, removed);
  std::vector<ItemId> merged;
  std::set_union(split.removed_popular.begin(), split.removed_popular.end(), removed.begin(), removed.end(),
                 std::back_inserter(merged));
  split.removed_popular = std::move(merged);
  return split;
}

std::vector<std::uint64_t> training_item_counts(const CorpusSplit& split) {
  std::vector<std::uint64_t> counts(split.num_items(), 0);
  for (const auto& u : split.users) {
    for (ItemId i : u.training_items()) ++counts[i];
  }
  return counts;
}

CorpusStats corpus_stats(const CorpusSplit& split) {
  return {split.num_items(), split.users.size(), split.train.size(), split.test.size()};
}

namespace {

constexpr std::string_view kCorpusMagic = "ai2v-corpus";
constexpr int kCorpusVersion = 1;

void check_token(const std::string& s, std::string_view what) {
  if (s.empty() || s.find_first_of("\t\n\r ") != std::string::npos) {
    throw DataError(std::string(what) + " id '" + s + "' is empty or contains whitespace");
  }
}

[[noreturn]] void corpus_error(std::size_t line_no, const std::string& msg) {
  throw DataError("corpus line " + std::to_string(line_no) + ": " + msg);
}

}  // namespace

void write_corpus(std::ostream& out, const CorpusSplit& split) {
  out << kCorpusMagic << '\t' << kCorpusVersion << '\n';
  out << "items\t" << split.num_items() << '\n';
  for (ItemId i = 0; i < split.num_items(); ++i) {
    check_token(split.vocab.external(i), "item");
    out << i << '\t' << split.vocab.external(i) << '\n';
  }
  out << "popular\t" << split.removed_popular.size();
  for (std::size_t k = 0; k < split.removed_popular.size(); ++k) {
    out << (k == 0 ? '\t' : ' ') << split.removed_popular[k];
  }
  out << '\n';
  out << "users\t" << split.users.size() << '\n';
  for (const auto& u : split.users) {
    check_token(u.id, "user");
    out << u.id << '\t';
    const auto& items = *u.items;
    for (std::size_t p = 0; p <= items.size(); ++p) {
      if (p == u.boundary) out << (p == 0 ? "" : " ") << '|';
      if (p < items.size()) out << (p == 0 && u.boundary != 0 ? "" : " ") << items[p];
    }
    out << '\n';
  }
}

CorpusSplit read_corpus(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) corpus_error(line_no + 1, "unexpected end of file");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };
  auto header_count = [&](std::string_view key) -> std::size_t {
    const auto fields = split_fields(next_line(), "\t");
    if (fields.size() < 2 || fields[0] != key) corpus_error(line_no, "expected '" + std::string(key) + "' header");
    const auto n = parse_number<std::size_t>(fields[1]);
    if (!n) corpus_error(line_no, "bad count");
    return *n;
  };

  {
    const auto fields = split_fields(next_line(), "\t");
    if (fields.size() != 2 || fields[0] != kCorpusMagic) corpus_error(line_no, "not a processed corpus file");
    if (parse_number<int>(fields[1]) != kCorpusVersion) corpus_error(line_no, "unsupported corpus version");
  }

  ItemVocab vocab;
  const std::size_t num_items = header_count("items");
  for (std::size_t i = 0; i < num_items; ++i) {
    const auto fields = split_fields(next_line(), "\t");
    if (fields.size() != 2 || parse_number<std::size_t>(fields[0]) != i) corpus_error(line_no, "bad item row");
    if (vocab.add(std::string(fields[1])) != i) corpus_error(line_no, "duplicate item id");
  }

  std::vector<ItemId> removed;
  {
    const auto fields = split_fields(next_line(), "\t");
    if (fields.empty() || fields[0] != "popular") corpus_error(line_no, "expected 'popular' header");
    const auto n = fields.size() > 1 ? parse_number<std::size_t>(fields[1]) : std::nullopt;
    if (!n) corpus_error(line_no, "bad count");
    if (*n > 0) {
      if (fields.size() != 3) corpus_error(line_no, "missing popular item list");
      std::istringstream ids{std::string(fields[2])};
      std::string tok;
      while (ids >> tok) {
        const auto id = parse_number<ItemId>(tok);
        if (!id || *id >= num_items) corpus_error(line_no, "bad popular item index");
        removed.push_back(*id);
      }
      if (removed.size() != *n) corpus_error(line_no, "popular item count mismatch");
    }
  }

  const std::size_t num_users = header_count("users");
  std::vector<SplitUser> users;
  users.reserve(num_users);
  for (std::size_t u = 0; u < num_users; ++u) {
    const auto fields = split_fields(next_line(), "\t");
    if (fields.size() != 2) corpus_error(line_no, "bad user row");
    std::vector<ItemId> items;
    std::optional<std::size_t> boundary;
    std::istringstream toks{std::string(fields[1])};
    std::string tok;
    while (toks >> tok) {
      if (tok == "|") {
        if (boundary) corpus_error(line_no, "two boundary markers");
        boundary = items.size();
        continue;
      }
      const auto id = parse_number<ItemId>(tok);
      if (!id || *id >= num_items) corpus_error(line_no, "bad item index '" + tok + "'");
      items.push_back(*id);
    }
    if (!boundary) corpus_error(line_no, "missing boundary marker");
    users.push_back({std::string(fields[0]), std::make_shared<const std::vector<ItemId>>(std::move(items)), *boundary});
  }

  auto split = assemble(std::move(vocab), std::move(users));
  std::sort(removed.begin(), removed.end());
  drop_targets(split, removed);
  split.removed_popular = std::move(removed);
  return split;
}

void save_corpus(const std::string& path, const CorpusSplit& split) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path);
  write_corpus(out, split);
  if (!out) throw DataError("failed writing corpus file: " + path);
}

CorpusSplit load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read corpus file: " + path);
  return read_corpus(in);
}

}  // namespace ai2v
