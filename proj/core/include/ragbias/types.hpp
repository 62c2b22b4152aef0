#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ragbias {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error hierarchy. The CLI maps these onto exit codes:
// ConfigError -> 2, EndpointError -> 3, InfeasibleError -> 4, DataError -> 5.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class EndpointError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class DuplicateIdError : public DataError {
 public:
  explicit DuplicateIdError(std::string id)
      : DataError("duplicate id \"" + id + "\""), id(std::move(id)) {}
  std::string id;
};

class DimensionMismatchError : public DataError {
 public:
  DimensionMismatchError(int expected, int got, long line = -1)
      : DataError("dimension mismatch: expected " + std::to_string(expected) +
                  ", got " + std::to_string(got) +
                  (line >= 0 ? " at line " + std::to_string(line) : "")),
        expected(expected),
        got(got),
        line(line) {}
  int expected;
  int got;
  long line;
};

enum class TaskType { NameGeneration, BinaryChoice };

std::string to_string(TaskType task);
TaskType task_from_string(const std::string& name);

// Two independent binary group judgments for one document or output.
struct GroupLabel {
  int g1 = 0;
  int g2 = 0;

  // Contribution of this item to the bias metric: g1 - g2 in {-1, 0, 1}.
  int signed_value() const { return g1 - g2; }
  // True when exactly one group applies.
  bool exclusive() const { return g1 + g2 == 1; }
  // Swap the group roles; negates signed_value.
  GroupLabel swapped() const { return {g2, g1}; }

  bool operator==(const GroupLabel&) const = default;
};

struct Document {
  std::string id;
  std::string text;
  Vec embedding;  // size 0 until embedded
  std::optional<GroupLabel> labels;

  bool has_embedding() const { return embedding.size() > 0; }
};

struct Choice {
  std::string text;
  GroupLabel labels;
};

struct Query {
  std::string id;
  std::string text;
  Vec embedding;
  std::optional<std::array<Choice, 2>> choices;  // binary-choice tasks only
};

struct Corpus {
  int dimension = 0;
  TaskType task = TaskType::NameGeneration;
  std::vector<Document> documents;

  const Document* find(const std::string& id) const;
};

// Parameters of the synthetic LLM response model.
struct LLMParams {
  double own_bias = 0.0;     // in [-1, 1]
  double sensitivity = 0.0;  // in [0, 1]
  double noise_sd = 0.0;     // >= 0

  void validate() const;
};

}  // namespace ragbias
