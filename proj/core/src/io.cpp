#include "ragbias/io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ragbias {

using nlohmann::json;

namespace {

json checked_parse(const std::string& line, long line_no,
                   const std::string& origin) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw DataError("malformed record at " + origin + ":" +
                    std::to_string(line_no));
  }
  return j;
}

Vec vec_from_json(const json& arr, long line_no, const std::string& origin) {
  if (!arr.is_array()) {
    throw DataError("embedding must be an array at " + origin + ":" +
                    std::to_string(line_no));
  }
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw DataError("non-numeric embedding entry at " + origin + ":" +
                      std::to_string(line_no));
    }
    v[Eigen::Index(i)] = arr[i].get<double>();
  }
  return v;
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

GroupLabel label_from_json(const json& j, long line_no,
                           const std::string& origin) {
  auto bad = [&] {
    throw DataError("labels must be {g1: 0|1, g2: 0|1} at " + origin + ":" +
                    std::to_string(line_no));
  };
  if (!j.is_object() || !j.contains("g1") || !j.contains("g2")) bad();
  GroupLabel label;
  label.g1 = j["g1"].get<int>();
  label.g2 = j["g2"].get<int>();
  if ((label.g1 != 0 && label.g1 != 1) || (label.g2 != 0 && label.g2 != 1))
    bad();
  return label;
}

json label_to_json(const GroupLabel& label) {
  return json{{"g1", label.g1}, {"g2", label.g2}};
}

void check_keys(const json& j, const std::set<std::string>& allowed,
                long line_no, const std::string& origin) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) {
      throw DataError("unknown field \"" + key + "\" at " + origin + ":" +
                      std::to_string(line_no));
    }
  }
}

}  // namespace

Corpus read_corpus(std::istream& in, TaskType task, const std::string& origin) {
  Corpus corpus;
  corpus.task = task;
  std::set<std::string> seen_ids;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = checked_parse(line, line_no, origin);
    check_keys(j, {"id", "text", "embedding", "labels"}, line_no, origin);
    if (!j.contains("id") || !j["id"].is_string()) {
      throw DataError("record missing id at " + origin + ":" +
                      std::to_string(line_no));
    }
    Document doc;
    doc.id = j["id"].get<std::string>();
    if (!seen_ids.insert(doc.id).second) throw DuplicateIdError(doc.id);
    doc.text = j.value("text", std::string{});
    if (j.contains("embedding") && !j["embedding"].is_null()) {
      doc.embedding = vec_from_json(j["embedding"], line_no, origin);
      if (corpus.dimension == 0) {
        corpus.dimension = int(doc.embedding.size());
      } else if (int(doc.embedding.size()) != corpus.dimension) {
        throw DimensionMismatchError(corpus.dimension, int(doc.embedding.size()),
                                     line_no);
      }
    }
    if (j.contains("labels") && !j["labels"].is_null()) {
      doc.labels = label_from_json(j["labels"], line_no, origin);
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, TaskType task) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file " + path);
  return read_corpus(in, task, path);
}

void write_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& doc : corpus.documents) {
    json j;
    j["id"] = doc.id;
    j["text"] = doc.text;
    if (doc.has_embedding()) j["embedding"] = vec_to_json(doc.embedding);
    if (doc.labels) j["labels"] = label_to_json(*doc.labels);
    out << j.dump() << "\n";
  }
}

void save_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus file " + path);
  write_corpus(corpus, out);
}

std::vector<Query> read_queries(std::istream& in, TaskType task,
                                const std::string& origin) {
  std::vector<Query> queries;
  std::set<std::string> seen_ids;
  std::string line;
  long line_no = 0;
  int dimension = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = checked_parse(line, line_no, origin);
    check_keys(j, {"id", "text", "embedding", "choices"}, line_no, origin);
    Query q;
    q.id = j.value("id", std::string{});
    if (q.id.empty()) {
      throw DataError("query missing id at " + origin + ":" +
                      std::to_string(line_no));
    }
    if (!seen_ids.insert(q.id).second) throw DuplicateIdError(q.id);
    q.text = j.value("text", std::string{});
    if (j.contains("embedding") && !j["embedding"].is_null()) {
      q.embedding = vec_from_json(j["embedding"], line_no, origin);
      if (dimension == 0) {
        dimension = int(q.embedding.size());
      } else if (int(q.embedding.size()) != dimension) {
        throw DimensionMismatchError(dimension, int(q.embedding.size()),
                                     line_no);
      }
    }
    if (task == TaskType::BinaryChoice) {
      if (!j.contains("choices") || !j["choices"].is_array() ||
          j["choices"].size() != 2) {
        throw DataError("binary-choice query needs exactly two choices at " +
                        origin + ":" + std::to_string(line_no));
      }
      std::array<Choice, 2> choices;
      for (int c = 0; c < 2; ++c) {
        const json& cj = j["choices"][c];
        check_keys(cj, {"text", "labels"}, line_no, origin);
        choices[c].text = cj.value("text", std::string{});
        if (!cj.contains("labels")) {
          throw DataError("choice missing labels at " + origin + ":" +
                          std::to_string(line_no));
        }
        choices[c].labels = label_from_json(cj["labels"], line_no, origin);
      }
      // one choice belongs to g1, the other to g2
      bool opposed = (choices[0].labels == GroupLabel{1, 0} &&
                      choices[1].labels == GroupLabel{0, 1}) ||
                     (choices[0].labels == GroupLabel{0, 1} &&
                      choices[1].labels == GroupLabel{1, 0});
      if (!opposed) {
        throw DataError("choice labels must be opposed at " + origin + ":" +
                        std::to_string(line_no));
      }
      q.choices = choices;
    } else if (j.contains("choices")) {
      throw DataError("name-generation query carries choices at " + origin +
                      ":" + std::to_string(line_no));
    }
    queries.push_back(std::move(q));
  }
  if (queries.empty()) throw DataError("empty query file " + origin);
  return queries;
}

std::vector<Query> load_queries(const std::string& path, TaskType task) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open query file " + path);
  return read_queries(in, task, path);
}

void write_queries(const std::vector<Query>& queries, std::ostream& out) {
  for (const auto& q : queries) {
    json j;
    j["id"] = q.id;
    j["text"] = q.text;
    if (q.embedding.size() > 0) j["embedding"] = vec_to_json(q.embedding);
    if (q.choices) {
      json arr = json::array();
      for (const auto& c : *q.choices) {
        arr.push_back({{"text", c.text}, {"labels", label_to_json(c.labels)}});
      }
      j["choices"] = arr;
    }
    out << j.dump() << "\n";
  }
}

void save_queries(const std::vector<Query>& queries, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write query file " + path);
  write_queries(queries, out);
}

ValidationReport validate_corpus(const Corpus& corpus) {
  ValidationReport report;
  for (const auto& doc : corpus.documents) {
    if (!doc.has_embedding() || doc.embedding.isZero(0.0)) {
      report.zero_embedding_ids.push_back(doc.id);
    }
    if (!doc.labels) {
      report.unlabeled_ids.push_back(doc.id);
      continue;
    }
    if (doc.labels->g1 == 1 && doc.labels->g2 == 0) {
      ++report.g1_count;
    } else if (doc.labels->g1 == 0 && doc.labels->g2 == 1) {
      ++report.g2_count;
    } else if (doc.labels->g1 == 1 && doc.labels->g2 == 1) {
      ++report.both_count;
    } else {
      ++report.neither_count;
    }
  }
  report.unlabeled_count = report.unlabeled_ids.size();
  return report;
}

Qrels load_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open qrels file " + path);
  Qrels qrels;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string query_id, doc_id;
    int grade = 0;
    if (!(ss >> query_id >> doc_id >> grade)) {
      throw DataError("malformed qrels line " + std::to_string(line_no) +
                      " in " + path);
    }
    qrels.grades[query_id][doc_id] = grade;
  }
  return qrels;
}

}  // namespace ragbias
