#include "ragbias/bias.hpp"

#include "ragbias/retrieval.hpp"

namespace ragbias {

std::string to_string(BiasComponent component) {
  switch (component) {
    case BiasComponent::Corpus:
      return "corpus";
    case BiasComponent::Embedder:
      return "embedder";
    case BiasComponent::Llm:
      return "llm";
    case BiasComponent::Rag:
      return "rag";
  }
  return "unknown";
}

double bias_score(const std::vector<GroupLabel>& labels) {
  if (labels.empty()) throw DataError("bias over an empty label set");
  double sum = 0.0;
  for (const auto& label : labels) sum += label.signed_value();
  return sum / double(labels.size());
}

namespace {

ComponentBias aggregate(BiasComponent component,
                        std::vector<std::pair<std::string, int>> per_query) {
  if (per_query.empty()) throw DataError("bias over an empty label set");
  ComponentBias bias;
  bias.component = component;
  bias.n = per_query.size();
  double sum = 0.0;
  for (const auto& [id, diff] : per_query) sum += diff;
  bias.value = sum / double(per_query.size());
  bias.per_query = std::move(per_query);
  return bias;
}

GroupLabel require_label(const Document& doc) {
  if (!doc.labels) {
    throw DataError("document \"" + doc.id + "\" is unlabeled");
  }
  return *doc.labels;
}

const Document& top1(const EmbedderModel& embedder, const Query& query,
                     const Corpus& corpus) {
  Vec emb = embedder.embed_query(query.embedding);
  auto result = retrieve_topk(emb, corpus, 1, query.id);
  const Document* doc = corpus.find(result.ranked.front().doc_id);
  if (!doc) throw DataError("retrieved id missing from corpus");
  return *doc;
}

// One output label for one query; doc == nullptr for the no-document case.
GroupLabel respond(const LlmSpec& llm, const Query& query, const Document* doc,
                   TaskType task, Judge* judge, std::uint64_t run_seed) {
  if (const auto* synthetic = std::get_if<SyntheticLlm>(&llm)) {
    std::optional<GroupLabel> doc_label;
    if (doc) doc_label = require_label(*doc);
    return synthetic_llm_respond(synthetic->params, doc_label, query.id,
                                 run_seed);
  }
  const auto& endpoint = std::get<EndpointLlm>(llm);
  if (!endpoint.backend) throw ConfigError("endpoint LLM without a backend");

  if (task == TaskType::BinaryChoice) {
    if (!query.choices) throw DataError("binary-choice query without choices");
    ChoiceOrdering ordering = randomize_choices(query.id, run_seed);
    std::string prompt = render_prompt(task, query, doc, &ordering);
    ChatResponse response =
        chat_complete(*endpoint.backend, endpoint.cfg, prompt);
    auto [p_a, p_b] = binary_choice_probs(response);
    char letter = (p_a >= p_b) ? 'A' : 'B';
    return (*query.choices)[std::size_t(ordering.original_index(letter))]
        .labels;
  }

  std::string prompt = render_prompt(task, query, doc, nullptr);
  ChatResponse response = chat_complete(*endpoint.backend, endpoint.cfg, prompt);
  if (!judge) throw ConfigError("name-generation bias needs a judge");
  auto labels = judge_labels({response.text}, *judge, task);
  return labels.front();
}

}  // namespace

ComponentBias corpus_bias(const Corpus& corpus) {
  std::vector<std::pair<std::string, int>> per_query;
  per_query.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    per_query.emplace_back(doc.id, require_label(doc).signed_value());
  }
  return aggregate(BiasComponent::Corpus, std::move(per_query));
}

ComponentBias embedder_bias(const EmbedderModel& embedder,
                            const std::vector<Query>& queries,
                            const Corpus& corpus) {
  std::vector<std::pair<std::string, int>> per_query;
  per_query.reserve(queries.size());
  for (const auto& query : queries) {
    const Document& doc = top1(embedder, query, corpus);
    per_query.emplace_back(query.id, require_label(doc).signed_value());
  }
  return aggregate(BiasComponent::Embedder, std::move(per_query));
}

ComponentBias llm_bias(const LlmSpec& llm, const std::vector<Query>& queries,
                       TaskType task, Judge* judge, std::uint64_t run_seed) {
  std::vector<std::pair<std::string, int>> per_query;
  per_query.reserve(queries.size());
  for (const auto& query : queries) {
    GroupLabel label = respond(llm, query, nullptr, task, judge, run_seed);
    per_query.emplace_back(query.id, label.signed_value());
  }
  return aggregate(BiasComponent::Llm, std::move(per_query));
}

ComponentBias rag_bias(const LlmSpec& llm, const EmbedderModel& embedder,
                       const Corpus& corpus, const std::vector<Query>& queries,
                       Judge* judge, std::uint64_t run_seed) {
  std::vector<std::pair<std::string, int>> per_query;
  per_query.reserve(queries.size());
  for (const auto& query : queries) {
    const Document& doc = top1(embedder, query, corpus);
    GroupLabel label = respond(llm, query, &doc, corpus.task, judge, run_seed);
    per_query.emplace_back(query.id, label.signed_value());
  }
  return aggregate(BiasComponent::Rag, std::move(per_query));
}

std::vector<GroupLabel> judge_labels(const std::vector<std::string>& texts,
                                     Judge& judge, TaskType task) {
  JudgeGroup g1 = (task == TaskType::NameGeneration) ? JudgeGroup::G1Gender
                                                     : JudgeGroup::G1Politics;
  JudgeGroup g2 = (task == TaskType::NameGeneration) ? JudgeGroup::G2Gender
                                                     : JudgeGroup::G2Politics;
  std::vector<GroupLabel> labels;
  labels.reserve(texts.size());
  for (const auto& text : texts) {
    GroupLabel label;
    label.g1 = judge.judge(text, g1);
    label.g2 = judge.judge(text, g2);
    if ((label.g1 != 0 && label.g1 != 1) || (label.g2 != 0 && label.g2 != 1))
      throw DataError("judge returned a non-binary verdict");
    labels.push_back(label);
  }
  return labels;
}

}  // namespace ragbias
