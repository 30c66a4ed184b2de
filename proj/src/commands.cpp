#include "ai2v/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "ai2v/checkpoint.hpp"
#include "ai2v/i2v.hpp"
#include "ai2v/train.hpp"

namespace ai2v {

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::string format_score(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

void write_sidecar(const std::string& artifact_path, const RunConfig& config) {
  std::ofstream out(artifact_path + ".config", std::ios::binary);
  if (!out) throw DataError("cannot write " + artifact_path + ".config");
  out << config.to_text();
}

void print_stats(std::ostream& out, const std::string& dataset, const CorpusStats& stats) {
  out << "dataset\t#items\t#users\t#training examples\t#test examples\n";
  out << dataset << '\t' << stats.items << '\t' << stats.users << '\t' << stats.train_examples << '\t'
      << stats.test_examples << '\n';
}

CorpusSplit cmd_prepare(const RunConfig& config, std::ostream& out) {
  config.validate();
  if (config.ratings.empty()) throw UsageError("prepare needs the 'ratings' key");
  const auto loaded = load_ratings(config.ratings, config.rating_format());
  auto events = loaded.events;
  if (config.sample_users > 0 || config.sample_items > 0) {
    events = sample_catalog(events, config.sample_users, config.sample_items, config.train.seed);
  }
  const auto rule = config.positivity_rule();
  const std::size_t min_len = std::max<std::size_t>(config.effective_min_len(), 2);
  const auto histories = build_histories(events, rule, min_len);

  if (histories.users.empty()) {
    std::unordered_set<std::string> positive_users;
    std::size_t positives = 0;
    for (const auto& ev : events) {
      if (rule.accepts(ev.rating)) {
        ++positives;
        positive_users.insert(ev.user);
      }
    }
    std::ostringstream msg;
    msg << "corpus is empty after filtering: " << loaded.events.size() << " events parsed (" << loaded.rejected
        << " lines rejected), " << events.size() << " kept by catalog sampling, " << positives
        << " positive events across " << positive_users.size() << " users, 0 users with at least " << min_len
        << " positive items";
    throw DataError(msg.str());
  }

  auto split = config.split == "temporal" ? split_by_time(histories, config.cutoff) : split_leave_last(histories);
  split = filter_popular_test(std::move(split), config.n_top_popular);

  save_corpus(config.corpus, split);
  write_sidecar(config.corpus, config);
  print_stats(out, config.format, corpus_stats(split));
  return split;
}

void cmd_train(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto split = load_corpus(config.corpus);
  if (split.num_items() < 2) {
    throw DataError("corpus has " + std::to_string(split.num_items()) + " items; training needs at least two");
  }
  out << "epoch\tloss\n";
  auto log = [&](std::size_t epoch, double loss) { out << epoch << '\t' << format_score(loss) << '\n' << std::flush; };
  if (config.model == "ai2v") {
    if (config.train.epochs > 0 && split.train.empty()) throw DataError("corpus has no training examples");
    const auto result = fit(split, config.train, log);
    save_checkpoint(config.checkpoint, result.params, config.save_optimizer_state ? &result.state : nullptr);
  } else {
    const auto result = train_i2v(split, config.train, log);
    save_checkpoint(config.checkpoint, result.params, config.save_optimizer_state ? &result.state : nullptr);
  }
  write_sidecar(config.checkpoint, config);
}

namespace {

// The scorer refers into *checkpoint, so the checkpoint stays on the heap.
struct LoadedModel {
  std::unique_ptr<Checkpoint> checkpoint;
  std::unique_ptr<CatalogScorer> scorer;
  std::string name;
};

LoadedModel load_model(const std::string& path, const CorpusSplit& split, const RunConfig& config) {
  LoadedModel m{std::make_unique<Checkpoint>(load_checkpoint(path)), nullptr, {}};
  std::size_t items = 0;
  if (auto* a = std::get_if<Ai2vCheckpoint>(m.checkpoint.get())) {
    items = a->params.dims.items;
    m.name = "ai2v";
  } else {
    items = std::get<I2vCheckpoint>(*m.checkpoint).params.num_items();
    m.name = "i2v";
  }
  if (items != split.num_items()) {
    throw DataError("model/corpus mismatch: " + path + " covers " + std::to_string(items) +
                    " items but the corpus has " + std::to_string(split.num_items()));
  }
  if (auto* a = std::get_if<Ai2vCheckpoint>(m.checkpoint.get())) {
    m.scorer = std::make_unique<Ai2vScorer>(a->params, config.train.context_cap);
  } else {
    m.scorer = std::make_unique<I2vScorer>(std::get<I2vCheckpoint>(*m.checkpoint).params);
  }
  return m;
}

}  // namespace

std::vector<std::pair<std::string, EvalReport>> cmd_evaluate(const RunConfig& config, std::ostream& out) {
  config.validate();
  const auto split = load_corpus(config.corpus);
  const auto paths = split_list(config.checkpoint);
  if (paths.empty()) throw UsageError("evaluate needs at least one checkpoint");

  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& path : paths) {
    const auto model = load_model(path, split, config);
    rows.emplace_back(model.name, evaluate(*model.scorer, split, {config.exclude_seen, config.train.threads}));
  }
  write_report(out, rows);
  if (!config.report.empty()) {
    std::ofstream file(config.report, std::ios::binary);
    if (!file) throw DataError("cannot write report: " + config.report);
    write_report(file, rows);
    write_sidecar(config.report, config);
  }
  if (!config.ranks.empty()) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto path = rows.size() == 1 ? config.ranks : config.ranks + "." + std::to_string(i) + "." + rows[i].first;
      std::ofstream file(path, std::ios::binary);
      if (!file) throw DataError("cannot write rank dump: " + path);
      write_rank_dump(file, split, rows[i].second);
    }
  }
  return rows;
}

void cmd_recommend(const RunConfig& config, const std::vector<std::string>& history, std::size_t top_k,
                   std::ostream& out) {
  config.validate();
  const auto split = load_corpus(config.corpus);
  const auto paths = split_list(config.checkpoint);
  if (paths.empty()) throw UsageError("recommend needs a checkpoint");
  if (history.empty()) throw UsageError("recommend needs a non-empty history");

  std::vector<ItemId> context;
  for (const auto& id : history) {
    const auto item = split.vocab.find(id);
    if (!item) throw DataError("unknown item id '" + id + "'");
    context.push_back(*item);
  }
  if (top_k == 0) return;
  const auto model = load_model(paths.front(), split, config);
  for (const auto& [item, score] : recommend(*model.scorer, context, top_k, config.exclude_seen)) {
    out << split.vocab.external(item) << '\t' << format_score(score) << '\n';
  }
}

}  // namespace ai2v
