#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ragbias/llm.hpp"

namespace ragbias {

// In-process scripted backend. Chat requests are matched against rules by
// prompt substring; the first matching rule answers. A rule can be scripted
// to fail with a 5xx status for its first `fail_before` calls, which
// exercises the client retry path. Embedding requests return either an
// explicit per-text vector or a deterministic hash-derived vector of the
// configured dimension.
class MockBackend : public ChatBackend {
 public:
  struct ChatRule {
    std::string contains;  // empty = match everything
    std::string reply;
    std::map<std::string, double> logprobs;  // first-token top logprobs
    int fail_before = 0;
    int fail_status = 500;
  };

  MockBackend() = default;

  void add_chat_rule(ChatRule rule);
  void set_default_reply(std::string reply) { default_reply_ = std::move(reply); }
  void set_embedding_dimension(int dim) { embedding_dim_ = dim; }
  void set_embedding(const std::string& text, Vec v);

  // Script JSON:
  // {"chat": {"default_reply": "...", "rules": [
  //    {"contains": "...", "reply": "...", "fail_before": 0,
  //     "logprobs": {"A": -0.1, "B": -2.4}}]},
  //  "embeddings": {"dimension": 8, "texts": {"...": [..]}}}
  static MockBackend from_script_file(const std::string& path);
  static MockBackend from_script_json(const std::string& json_text);

  WireReply post_chat(const EndpointConfig& cfg,
                      const std::string& request_body) override;
  WireReply post_embeddings(const EndpointConfig& cfg,
                            const std::string& request_body) override;

  int chat_calls() const { return chat_calls_; }

 private:
  std::vector<ChatRule> rules_;
  std::vector<int> rule_calls_;
  std::string default_reply_;
  int embedding_dim_ = 8;
  std::map<std::string, Vec> embeddings_;
  int chat_calls_ = 0;
  // behind a pointer so the backend stays movable
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

// Judge whose verdicts come from a scripted backend.
// Convenience for tests that only need fixed YES/NO behavior.
class ScriptedJudge : public Judge {
 public:
  using Fn = std::function<int(const std::string&, JudgeGroup)>;
  explicit ScriptedJudge(Fn fn) : fn_(std::move(fn)) {}
  int judge(const std::string& text, JudgeGroup group) override {
    return fn_(text, group);
  }

 private:
  Fn fn_;
};

}  // namespace ragbias
