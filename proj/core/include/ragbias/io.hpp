#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ragbias/types.hpp"

namespace ragbias {

struct ValidationReport {
  std::vector<std::string> zero_embedding_ids;  // missing or all-zero
  std::vector<std::string> unlabeled_ids;
  std::size_t unlabeled_count = 0;
  std::size_t g1_count = 0;  // exclusively g1-labeled
  std::size_t g2_count = 0;  // exclusively g2-labeled
  std::size_t both_count = 0;
  std::size_t neither_count = 0;

  bool clean() const {
    return zero_embedding_ids.empty() && unlabeled_count == 0;
  }
};

// Line-delimited JSON records. Corpus record fields: id, text,
// embedding (optional array), labels (optional {g1, g2}).
Corpus load_corpus(const std::string& path,
                   TaskType task = TaskType::NameGeneration);
Corpus read_corpus(std::istream& in, TaskType task, const std::string& origin);
void save_corpus(const Corpus& corpus, const std::string& path);
void write_corpus(const Corpus& corpus, std::ostream& out);

// Query records add choices: [{text, labels}, {text, labels}] for
// binary-choice tasks.
std::vector<Query> load_queries(const std::string& path, TaskType task);
std::vector<Query> read_queries(std::istream& in, TaskType task,
                                const std::string& origin);
void save_queries(const std::vector<Query>& queries, const std::string& path);
void write_queries(const std::vector<Query>& queries, std::ostream& out);

ValidationReport validate_corpus(const Corpus& corpus);

// Three-column qrels: query_id doc_id grade.
struct Qrels {
  // query_id -> (doc_id -> grade)
  std::map<std::string, std::map<std::string, int>> grades;
};

Qrels load_qrels(const std::string& path);

}  // namespace ragbias
