#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ragbias/analysis.hpp"
#include "ragbias/bias.hpp"
#include "ragbias/embedder.hpp"
#include "ragbias/io.hpp"
#include "ragbias/mock.hpp"
#include "ragbias/simulation.hpp"

namespace ragbias {

// Declarative description of one run. JSON with a versioned schema;
// unknown keys are configuration errors.
struct ExperimentConfig {
  nlohmann::json raw;
  std::string config_hash;  // over the canonical dump

  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig parse(const std::string& json_text);
};

struct RunOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int workers = 4;
  bool force_mock = false;
};

// Components assembled from the config; owns any backing mock/HTTP state.
struct Assembly {
  Corpus corpus;
  std::vector<Query> queries;
  std::optional<World> world;  // present for task "synthetic"
  EmbedderModel embedder;
  std::vector<EmbedderModel> family;
  TaskType task = TaskType::NameGeneration;
  LlmSpec llm = SyntheticLlm{};
  std::unique_ptr<ChatBackend> llm_backend;
  std::unique_ptr<ChatBackend> judge_backend;
  std::unique_ptr<Judge> judge;
  std::unique_ptr<ChatBackend> embedder_backend;
  std::unique_ptr<TextEmbedder> text_embedder;
};

Assembly assemble(const ExperimentConfig& cfg, const RunOptions& opts);

// Subcommand runners; each writes delimiter-separated tables plus a
// provenance record into opts.out_dir and returns 0 on success.
int run_measure(const ExperimentConfig& cfg, const RunOptions& opts);
int run_train(const ExperimentConfig& cfg, const RunOptions& opts);
int run_sweep(const ExperimentConfig& cfg, const RunOptions& opts);
int run_mine_pairs(const ExperimentConfig& cfg, const RunOptions& opts);
int run_fit(const ExperimentConfig& cfg, const RunOptions& opts);
int run_select(const ExperimentConfig& cfg, const RunOptions& opts);
int run_pareto(const ExperimentConfig& cfg, const RunOptions& opts);
int run_project_sweep(const ExperimentConfig& cfg, const RunOptions& opts);
int run_sample_sweep(const ExperimentConfig& cfg, const RunOptions& opts);
int run_corpus_sweep(const ExperimentConfig& cfg, const RunOptions& opts);
int run_utility(const ExperimentConfig& cfg, const RunOptions& opts);
int run_simulate(const ExperimentConfig& cfg, const RunOptions& opts);

// Bounded-worker parallel map over [0, n); results merged by index.
void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace ragbias
