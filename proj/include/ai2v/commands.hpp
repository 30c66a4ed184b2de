#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ai2v/config.hpp"
#include "ai2v/corpus.hpp"
#include "ai2v/eval.hpp"

namespace ai2v {

/// ratings -> histories -> split -> popular-target filter -> corpus file.
/// Prints the stats table to `out`. Returns the split it wrote.
CorpusSplit cmd_prepare(const RunConfig& config, std::ostream& out);

/// Trains config.model on the corpus file and writes the checkpoint.
/// Prints "epoch\tloss" lines.
void cmd_train(const RunConfig& config, std::ostream& out);

/// Evaluates every checkpoint listed in config.checkpoint (comma-separated)
/// and prints the report table. Returns the reports in listing order.
std::vector<std::pair<std::string, EvalReport>> cmd_evaluate(const RunConfig& config, std::ostream& out);

/// Prints the top_k "item\tscore" recommendations for an external-id history.
void cmd_recommend(const RunConfig& config, const std::vector<std::string>& history, std::size_t top_k,
                   std::ostream& out);

/// Writes `<artifact>.config` holding the effective configuration.
void write_sidecar(const std::string& artifact_path, const RunConfig& config);

void print_stats(std::ostream& out, const std::string& dataset, const CorpusStats& stats);

}  // namespace ai2v
