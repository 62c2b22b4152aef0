#include "ragbias/mock.hpp"

#include <fstream>

#include <json.hpp>

#include "ragbias/rng.hpp"

namespace ragbias {

using nlohmann::json;

void MockBackend::add_chat_rule(ChatRule rule) {
  rules_.push_back(std::move(rule));
  rule_calls_.push_back(0);
}

void MockBackend::set_embedding(const std::string& text, Vec v) {
  embeddings_[text] = std::move(v);
}

MockBackend MockBackend::from_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mock script " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_script_json(text);
}

MockBackend MockBackend::from_script_json(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed mock script");
  MockBackend mock;
  if (j.contains("chat")) {
    const json& chat = j["chat"];
    mock.default_reply_ = chat.value("default_reply", std::string{});
    for (const auto& r : chat.value("rules", json::array())) {
      ChatRule rule;
      rule.contains = r.value("contains", std::string{});
      rule.reply = r.value("reply", std::string{});
      rule.fail_before = r.value("fail_before", 0);
      rule.fail_status = r.value("fail_status", 500);
      if (r.contains("logprobs")) {
        for (const auto& [token, lp] : r["logprobs"].items())
          rule.logprobs[token] = lp.get<double>();
      }
      mock.add_chat_rule(std::move(rule));
    }
  }
  if (j.contains("embeddings")) {
    const json& emb = j["embeddings"];
    mock.embedding_dim_ = emb.value("dimension", 8);
    if (emb.contains("texts")) {
      for (const auto& [text, arr] : emb["texts"].items()) {
        Vec v(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i)
          v[Eigen::Index(i)] = arr[i].get<double>();
        mock.embeddings_[text] = std::move(v);
      }
    }
  }
  return mock;
}

WireReply MockBackend::post_chat(const EndpointConfig& cfg,
                                 const std::string& request_body) {
  (void)cfg;
  std::lock_guard<std::mutex> lock(*mutex_);
  ++chat_calls_;
  json request = json::parse(request_body, nullptr, false);
  std::string prompt;
  if (!request.is_discarded() && request.contains("messages") &&
      !request["messages"].empty()) {
    prompt = request["messages"][0].value("content", std::string{});
  }

  const ChatRule* matched = nullptr;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    if (rules_[i].contains.empty() ||
        prompt.find(rules_[i].contains) != std::string::npos) {
      ++rule_calls_[i];
      if (rule_calls_[i] <= rules_[i].fail_before) {
        return {rules_[i].fail_status, "scripted failure", false, ""};
      }
      matched = &rules_[i];
      break;
    }
  }

  std::string reply_text = matched ? matched->reply : default_reply_;
  json choice = {{"message", {{"role", "assistant"}, {"content", reply_text}}},
                 {"finish_reason", "stop"}};
  if (matched && !matched->logprobs.empty()) {
    json top = json::array();
    for (const auto& [token, lp] : matched->logprobs) {
      top.push_back({{"token", token}, {"logprob", lp}});
    }
    choice["logprobs"] = {
        {"content", json::array({json{{"token", reply_text.substr(0, 1)},
                                      {"top_logprobs", top}}})}};
  }
  json body = {{"object", "chat.completion"},
               {"model", "mock"},
               {"choices", json::array({choice})}};
  return {200, body.dump(), false, ""};
}

WireReply MockBackend::post_embeddings(const EndpointConfig& cfg,
                                       const std::string& request_body) {
  (void)cfg;
  std::lock_guard<std::mutex> lock(*mutex_);
  json request = json::parse(request_body, nullptr, false);
  if (request.is_discarded() || !request.contains("input")) {
    return {400, "bad request", false, ""};
  }
  json data = json::array();
  for (const auto& item : request["input"]) {
    std::string text = item.get<std::string>();
    json arr = json::array();
    auto it = embeddings_.find(text);
    if (it != embeddings_.end()) {
      for (Eigen::Index i = 0; i < it->second.size(); ++i)
        arr.push_back(it->second[i]);
    } else {
      // deterministic pseudo-embedding from the text hash
      Rng rng(fnv1a64(text));
      for (int i = 0; i < embedding_dim_; ++i)
        arr.push_back(rng.uniform(-1.0, 1.0));
    }
    data.push_back({{"object", "embedding"}, {"embedding", arr}});
  }
  json body = {{"object", "list"}, {"data", data}};
  return {200, body.dump(), false, ""};
}

}  // namespace ragbias
