#include "ragbias/types.hpp"

namespace ragbias {

std::string to_string(TaskType task) {
  switch (task) {
    case TaskType::NameGeneration:
      return "name-generation";
    case TaskType::BinaryChoice:
      return "binary-choice";
  }
  return "unknown";
}

TaskType task_from_string(const std::string& name) {
  if (name == "name-generation") return TaskType::NameGeneration;
  if (name == "binary-choice") return TaskType::BinaryChoice;
  throw ConfigError("unknown task type \"" + name + "\"");
}

const Document* Corpus::find(const std::string& id) const {
  for (const auto& doc : documents) {
    if (doc.id == id) return &doc;
  }
  return nullptr;
}

void LLMParams::validate() const {
  if (own_bias < -1.0 || own_bias > 1.0)
    throw ConfigError("own_bias must be in [-1, 1]");
  if (sensitivity < 0.0 || sensitivity > 1.0)
    throw ConfigError("sensitivity must be in [0, 1]");
  if (noise_sd < 0.0) throw ConfigError("noise_sd must be nonnegative");
}

}  // namespace ragbias
