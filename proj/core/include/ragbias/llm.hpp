#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ragbias/types.hpp"

namespace ragbias {

// Mapping from displayed letters {A, B} to the original choice indices.
struct ChoiceOrdering {
  std::string query_id;
  bool a_is_first = true;  // displayed A == original choice 0

  int original_index(char displayed_letter) const {
    bool first = (displayed_letter == 'A' || displayed_letter == 'a');
    return (first == a_is_first) ? 0 : 1;
  }
  char displayed_letter(int original_index) const {
    return ((original_index == 0) == a_is_first) ? 'A' : 'B';
  }
};

// Pure function of (query_id, run_seed); a_is_first is balanced over ids.
ChoiceOrdering randomize_choices(const std::string& query_id,
                                 std::uint64_t run_seed);

// Generation prompt for (task, with/without document). Binary-choice
// requires an ordering and both choices on the query.
std::string render_prompt(TaskType task, const Query& query,
                          const Document* doc = nullptr,
                          const ChoiceOrdering* ordering = nullptr);

enum class JudgeGroup { G1Gender, G2Gender, G1Politics, G2Politics };

std::string render_judge_prompt(JudgeGroup group, const std::string& text);

// Query rewrite that steers retrieval toward one group's documents.
std::string render_steering_prompt(TaskType task, bool toward_g1,
                                   const std::string& query_text);

struct EndpointConfig {
  std::string base_url;      // e.g. https://api.example.com/v1
  std::string model;
  std::string auth_env;      // environment variable holding the token
  double timeout_s = 30.0;
  int max_retries = 2;
  double backoff_s = 0.5;    // doubled per retry
  double temperature = 0.0;  // greedy by default
  bool request_logprobs = false;
  int top_logprobs = 5;
};

// Transport-level reply; parsed by the client layer.
struct WireReply {
  int status = 0;
  std::string body;
  bool transport_error = false;
  std::string error;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual WireReply post_chat(const EndpointConfig& cfg,
                              const std::string& request_body) = 0;
  virtual WireReply post_embeddings(const EndpointConfig& cfg,
                                    const std::string& request_body) = 0;
};

// OpenAI-compatible HTTP backend (chat-completions and embeddings routes).
class HttpBackend : public ChatBackend {
 public:
  WireReply post_chat(const EndpointConfig& cfg,
                      const std::string& request_body) override;
  WireReply post_embeddings(const EndpointConfig& cfg,
                            const std::string& request_body) override;
};

struct ChatResponse {
  std::string text;
  // First generated token's top logprobs, keyed by token text.
  std::map<std::string, double> first_token_logprobs;
};

// Sends the prompt as a single user turn; retries transient failures
// (5xx / transport errors) with exponential backoff.
ChatResponse chat_complete(ChatBackend& backend, const EndpointConfig& cfg,
                           const std::string& prompt);

// One vector per input text, order preserved, uniform dimension.
std::vector<Vec> embed_texts(ChatBackend& backend, const EndpointConfig& cfg,
                             const std::vector<std::string>& texts);

// Strict YES/NO parse: case-insensitive first alphabetic token.
std::optional<int> parse_yes_no(const std::string& reply);

// Renders the judge prompt for the group and parses the YES/NO answer;
// retries the call once on an unparseable reply.
int judge_binary(ChatBackend& backend, const EndpointConfig& cfg,
                 const std::string& text, JudgeGroup group);

// (p_a, p_b) with p_a + p_b = 1. Prefers first-token logprobs over both
// letters; falls back to an indicator on the first alphabetic token.
std::pair<double, double> binary_choice_probs(const ChatResponse& response);

// Group labeling interface used by bias measurements and pair mining.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual int judge(const std::string& text, JudgeGroup group) = 0;
};

class EndpointJudge : public Judge {
 public:
  EndpointJudge(ChatBackend& backend, EndpointConfig cfg)
      : backend_(backend), cfg_(std::move(cfg)) {}
  int judge(const std::string& text, JudgeGroup group) override {
    return judge_binary(backend_, cfg_, text, group);
  }

 private:
  ChatBackend& backend_;
  EndpointConfig cfg_;
};

// Text embedding source for texts without precomputed vectors.
class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual Vec embed(const std::string& text) = 0;
};

class EndpointTextEmbedder : public TextEmbedder {
 public:
  EndpointTextEmbedder(ChatBackend& backend, EndpointConfig cfg)
      : backend_(backend), cfg_(std::move(cfg)) {}
  Vec embed(const std::string& text) override {
    return embed_texts(backend_, cfg_, {text}).front();
  }

 private:
  ChatBackend& backend_;
  EndpointConfig cfg_;
};

// Synthetic LLM response rule. With probability `sensitivity` (when an
// exclusive document label is given) copy the document's label; otherwise
// emit an exclusive label whose signed value has expectation
// clamp(own_bias + N(0, noise_sd), -1, 1). Deterministic per
// (query_id, seed) and independent of params, so the same draws are
// reused across embedders.
GroupLabel synthetic_llm_respond(const LLMParams& params,
                                 const std::optional<GroupLabel>& doc_label,
                                 const std::string& query_id,
                                 std::uint64_t seed);

}  // namespace ragbias
