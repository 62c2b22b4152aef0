#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragbias/types.hpp"

namespace ragbias {

enum class RetrievalMethod { Top1, TopK, Boltzmann, Projected };

std::string to_string(RetrievalMethod method);

struct ScoredDoc {
  std::string doc_id;
  double score = 0.0;
};

struct RetrievalResult {
  std::string query_id;
  std::vector<ScoredDoc> ranked;  // scores non-increasing for deterministic methods
  RetrievalMethod method = RetrievalMethod::TopK;
};

// dot(a,b) / (|a||b|). Throws DataError on zero vectors,
// DimensionMismatchError on length disagreement.
double cosine(const Vec& a, const Vec& b);

// Exhaustive top-k by cosine; ties broken by ascending doc id.
RetrievalResult retrieve_topk(const Vec& query_emb, const Corpus& corpus,
                              std::size_t k, const std::string& query_id = "");

// Restrict to the top-n candidates by cosine, then draw one with
// probability proportional to exp(cos/tau). tau = 0 returns the argmax.
std::string sample_boltzmann(const Vec& query_emb, const Corpus& corpus,
                             std::size_t n, double tau, std::uint64_t seed);

// Softmax over candidate scores at temperature tau (numerically stable).
std::vector<double> boltzmann_probs(const std::vector<double>& scores,
                                    double tau);

struct ProjectionSpec {
  Vec bias_direction;  // p, nonzero
  double alpha = 1.0;  // 1 = identity; >1 amplifies the bias component
};

// q_alpha = q - (q.p/|p|^2) p + alpha (q.p/|p|^2) p
Vec project_query(const Vec& q, const ProjectionSpec& spec);

}  // namespace ragbias
