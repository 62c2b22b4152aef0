#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ragbias/embedder.hpp"
#include "ragbias/llm.hpp"
#include "ragbias/types.hpp"

namespace ragbias {

enum class BiasComponent { Corpus, Embedder, Llm, Rag };

std::string to_string(BiasComponent component);

struct ComponentBias {
  BiasComponent component = BiasComponent::Corpus;
  double value = 0.0;  // in [-1, 1]
  std::size_t n = 0;
  std::vector<std::pair<std::string, int>> per_query;  // (id, g1 - g2)
};

// Eq.-style bias metric: mean of (g1 - g2) over all items.
double bias_score(const std::vector<GroupLabel>& labels);

ComponentBias corpus_bias(const Corpus& corpus);

ComponentBias embedder_bias(const EmbedderModel& embedder,
                            const std::vector<Query>& queries,
                            const Corpus& corpus);

// The LLM under measurement: either the synthetic response model or an
// OpenAI-compatible endpoint (real or mock backend).
struct SyntheticLlm {
  LLMParams params;
};

struct EndpointLlm {
  ChatBackend* backend = nullptr;
  EndpointConfig cfg;
};

using LlmSpec = std::variant<SyntheticLlm, EndpointLlm>;

// Bias of the LLM output with no retrieved document. Name-generation
// outputs are labeled by the judge; binary-choice outputs by the chosen
// choice's labels. Choice order is randomized per (query_id, run_seed).
ComponentBias llm_bias(const LlmSpec& llm, const std::vector<Query>& queries,
                       TaskType task, Judge* judge, std::uint64_t run_seed);

// Same, conditioned on the top-1 retrieved document.
ComponentBias rag_bias(const LlmSpec& llm, const EmbedderModel& embedder,
                       const Corpus& corpus, const std::vector<Query>& queries,
                       Judge* judge, std::uint64_t run_seed);

// Two independent YES/NO judgments per text, one per group. The group
// prompt pair is selected by task (gender vs politics).
std::vector<GroupLabel> judge_labels(const std::vector<std::string>& texts,
                                     Judge& judge, TaskType task);

}  // namespace ragbias
