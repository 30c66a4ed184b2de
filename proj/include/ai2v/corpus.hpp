#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ai2v/common.hpp"

namespace ai2v {

struct RatingEvent {
  std::string user;
  std::string item;
  double rating = 0.0;
  std::optional<std::int64_t> timestamp;
};

/// Column layout of a delimiter-separated ratings file.
struct RatingFormat {
  std::string delimiter = "\t";
  int user_column = 0;
  int item_column = 1;
  int rating_column = 2;
  int timestamp_column = 3;
  bool has_timestamp = true;

  static RatingFormat movielens();  // "user::item::rating::timestamp"
  static RatingFormat yahoo();
  static RatingFormat generic();
};

struct LoadResult {
  std::vector<RatingEvent> events;
  std::size_t rejected = 0;
};

/// Events in file order. Lines with too few fields, a non-numeric or
/// non-finite rating, or a bad timestamp are rejected and counted.
LoadResult parse_ratings(std::istream& in, const RatingFormat& format);
LoadResult load_ratings(const std::string& path, const RatingFormat& format);

/// Which ratings count as positive consumption.
struct PositivityRule {
  enum class Kind { kAll, kAbove, kAtLeastExcept };
  Kind kind = Kind::kAll;
  double threshold = 0.0;
  double excluded = 0.0;

  /// rating > threshold
  static PositivityRule movielens(double threshold = 3.5);
  /// rating >= threshold and rating != excluded
  static PositivityRule yahoo(double threshold = 80.0, double excluded = 255.0);
  static PositivityRule none();

  bool accepts(double rating) const;
};

/// Bijection between external item ids and dense indices [0, J).
class ItemVocab {
 public:
  ItemId add(const std::string& external);
  std::optional<ItemId> find(const std::string& external) const;
  const std::string& external(ItemId id) const { return ids_.at(id); }
  std::size_t size() const { return ids_.size(); }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, ItemId> index_;
};

struct UserHistory {
  std::string user;
  std::vector<ItemId> items;
  /// Parallel to items; empty when the source had no timestamps.
  std::vector<std::int64_t> timestamps;
};

struct HistorySet {
  ItemVocab vocab;
  std::vector<UserHistory> users;
};

/// Groups events per user (users in order of first appearance), sorts each
/// user's events by timestamp (stable, so ties keep file order), keeps the
/// positives and drops users with fewer than min_len of them. The vocabulary
/// covers exactly the items of the surviving histories.
HistorySet build_histories(std::span<const RatingEvent> events, const PositivityRule& rule,
                           std::size_t min_len);

/// Seeded reservoir sampling of at most max_users users and max_items items
/// (0 keeps all); returns the events whose user and item were both kept.
std::vector<RatingEvent> sample_catalog(std::span<const RatingEvent> events, std::size_t max_users,
                                        std::size_t max_items, std::uint64_t seed);

/// A prefix example: the first `length` items of a user's history predict
/// the next one. The history is shared between all examples of a user.
struct TrainExample {
  std::shared_ptr<const std::vector<ItemId>> history;
  std::uint32_t user = 0;
  std::uint32_t length = 0;
  ItemId target = 0;

  std::span<const ItemId> context() const { return {history->data(), length}; }

  /// Stand-alone example, mostly for tests.
  static TrainExample make(std::vector<ItemId> context, ItemId target, std::uint32_t user = 0);
};

struct SplitUser {
  std::string id;
  std::shared_ptr<const std::vector<ItemId>> items;
  /// Position of the first test-period item. Targets before it are training
  /// targets, targets at or after it are test targets.
  std::size_t boundary = 0;

  std::span<const ItemId> training_items() const { return {items->data(), boundary}; }
};

struct CorpusSplit {
  ItemVocab vocab;
  std::vector<SplitUser> users;
  std::vector<TrainExample> train;
  std::vector<TrainExample> test;
  /// Occurrences of each item across training contexts plus targets.
  std::vector<std::uint64_t> train_popularity;
  /// Test targets excluded by filter_popular_test.
  std::vector<ItemId> removed_popular;

  std::size_t num_items() const { return vocab.size(); }
};

/// Last item of each user is the single test target; earlier prefixes train.
CorpusSplit split_leave_last(const HistorySet& histories);

/// Items consumed at or after `cutoff` are test targets. Test prefixes keep
/// the training-period items in front of them.
CorpusSplit split_by_time(const HistorySet& histories, std::int64_t cutoff);

/// Removes test examples whose target is among the n_top most popular
/// training items (ties broken by smaller index; items never seen in training
/// are not candidates). Training data is untouched.
CorpusSplit filter_popular_test(CorpusSplit split, std::size_t n_top);

/// Item occurrence counts over every user's training-period items.
std::vector<std::uint64_t> training_item_counts(const CorpusSplit& split);

/// Table-style summary: items, users, train and test example counts.
struct CorpusStats {
  std::size_t items = 0;
  std::size_t users = 0;
  std::size_t train_examples = 0;
  std::size_t test_examples = 0;
};
CorpusStats corpus_stats(const CorpusSplit& split);

/// Processed-corpus text file, see README for the layout.
void write_corpus(std::ostream& out, const CorpusSplit& split);
CorpusSplit read_corpus(std::istream& in);
void save_corpus(const std::string& path, const CorpusSplit& split);
CorpusSplit load_corpus(const std::string& path);

}  // namespace ai2v
