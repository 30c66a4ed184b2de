// Command-line front end: prepare, train, evaluate, recommend.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ai2v/commands.hpp"
#include "ai2v/config.hpp"

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

std::vector<std::string> split_history(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(tok);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AI2V and I2V recommenders: corpus preparation, training, evaluation, recommendation"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed;
  std::string threads;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value configuration file");
    cmd->add_option("--seed", seed, "random seed (overrides the config file)");
    cmd->add_option("--threads", threads, "worker threads (1 is the determinism reference)");
    cmd->add_option("--set", overrides, "override a config key, key=value")->allow_extra_args(false);
  };

  auto* prepare = app.add_subcommand("prepare", "ratings file -> processed corpus");
  auto* train = app.add_subcommand("train", "train the configured model on the corpus");
  auto* evaluate = app.add_subcommand("evaluate", "HR@K / MRR@K report for one or more checkpoints");
  auto* recommend = app.add_subcommand("recommend", "top-k items for a history of external item ids");
  for (auto* cmd : {prepare, train, evaluate, recommend}) add_common(cmd);

  std::string history;
  std::size_t top_k = 10;
  recommend->add_option("--history", history, "comma-separated external item ids")->required();
  recommend->add_option("--top-k", top_k, "number of items to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    ai2v::RunConfig config;
    if (!config_path.empty()) config.merge_file(config_path);
    for (const auto& o : overrides) config.apply_override(o);
    if (!seed.empty()) config.set("seed", seed);
    if (!threads.empty()) config.set("threads", threads);

    if (prepare->parsed()) {
      ai2v::cmd_prepare(config, std::cout);
    } else if (train->parsed()) {
      ai2v::cmd_train(config, std::cout);
    } else if (evaluate->parsed()) {
      ai2v::cmd_evaluate(config, std::cout);
    } else if (recommend->parsed()) {
      ai2v::cmd_recommend(config, split_history(history), top_k, std::cout);
    }
  } catch (const ai2v::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return 0;
}
