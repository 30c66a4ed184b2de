#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ai2v/corpus.hpp"
#include "ai2v/optim.hpp"

namespace ai2v {

/// Everything a CLI run needs. Files use a flat `key = value` grammar with
/// `#` comments; command-line overrides are applied on top.
struct RunConfig {
  // Raw data and preprocessing.
  std::string ratings;
  std::string format = "movielens";  // movielens | yahoo | generic
  std::string delimiter;             // empty: the format's default
  bool has_timestamp = true;
  double rating_threshold = -1.0;    // negative: the format's default
  std::string split = "leave-last";  // leave-last | temporal
  std::int64_t cutoff = 0;
  std::size_t min_len = 0;           // 0: 2 for leave-last, 4 for temporal
  std::size_t n_top_popular = 20;
  std::size_t sample_users = 0;
  std::size_t sample_items = 0;

  // Model and artifacts.
  std::string model = "ai2v";  // ai2v | i2v
  std::string corpus = "corpus.txt";
  std::string checkpoint = "model.ckpt";  // evaluate accepts a comma-separated list
  std::string report;                     // empty: stdout only
  std::string ranks;                      // optional per-example rank dump
  bool exclude_seen = false;
  bool save_optimizer_state = true;

  TrainConfig train;

  /// Applies one key. Unknown keys and malformed values are UsageErrors.
  void set(const std::string& key, const std::string& value);

  /// Reads `key = value` lines.
  void merge_file(const std::string& path);
  void merge_stream(std::istream& in, const std::string& origin);

  /// `key=value` override as given on the command line.
  void apply_override(const std::string& assignment);

  /// Effective configuration, one `key = value` per line in a fixed order.
  std::vector<std::pair<std::string, std::string>> effective() const;
  std::string to_text() const;

  RatingFormat rating_format() const;
  PositivityRule positivity_rule() const;
  std::size_t effective_min_len() const;

  void validate() const;
};

}  // namespace ai2v
