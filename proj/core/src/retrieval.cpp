#include "ragbias/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "ragbias/rng.hpp"

namespace ragbias {

std::string to_string(RetrievalMethod method) {
  switch (method) {
    case RetrievalMethod::Top1:
      return "top1";
    case RetrievalMethod::TopK:
      return "topk";
    case RetrievalMethod::Boltzmann:
      return "boltzmann";
    case RetrievalMethod::Projected:
      return "projected";
  }
  return "unknown";
}

double cosine(const Vec& a, const Vec& b) {
  if (a.size() != b.size())
    throw DimensionMismatchError(int(a.size()), int(b.size()));
  double na = a.norm();
  double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw DataError("cosine of a zero vector");
  return a.dot(b) / (na * nb);
}

namespace {

// All (score, id) pairs sorted by descending score, ties by ascending id.
std::vector<ScoredDoc> rank_all(const Vec& query_emb, const Corpus& corpus) {
  std::vector<ScoredDoc> scored;
  scored.reserve(corpus.documents.size());
  for (const auto& doc : corpus.documents) {
    if (!doc.has_embedding()) {
      throw DataError("document \"" + doc.id + "\" has no embedding");
    }
    scored.push_back({doc.id, cosine(query_emb, doc.embedding)});
  }
  std::sort(scored.begin(), scored.end(),
            [](const ScoredDoc& x, const ScoredDoc& y) {
              if (x.score != y.score) return x.score > y.score;
              return x.doc_id < y.doc_id;
            });
  return scored;
}

}  // namespace

RetrievalResult retrieve_topk(const Vec& query_emb, const Corpus& corpus,
                              std::size_t k, const std::string& query_id) {
  if (corpus.documents.empty()) throw DataError("retrieval over empty corpus");
  if (k > corpus.documents.size()) {
    throw DataError("k = " + std::to_string(k) + " exceeds corpus size " +
                    std::to_string(corpus.documents.size()));
  }
  RetrievalResult result;
  result.query_id = query_id;
  result.method = (k == 1) ? RetrievalMethod::Top1 : RetrievalMethod::TopK;
  result.ranked = rank_all(query_emb, corpus);
  result.ranked.resize(k);
  return result;
}

std::vector<double> boltzmann_probs(const std::vector<double>& scores,
                                    double tau) {
  if (scores.empty()) throw DataError("empty candidate set");
  if (tau < 0.0) throw DataError("negative temperature");
  std::vector<double> probs(scores.size(), 0.0);
  if (tau == 0.0) {
    auto it = std::max_element(scores.begin(), scores.end());
    probs[std::size_t(it - scores.begin())] = 1.0;
    return probs;
  }
  double max_score = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    probs[i] = std::exp((scores[i] - max_score) / tau);
    total += probs[i];
  }
  for (auto& p : probs) p /= total;
  return probs;
}

std::string sample_boltzmann(const Vec& query_emb, const Corpus& corpus,
                             std::size_t n, double tau, std::uint64_t seed) {
  if (corpus.documents.empty()) throw DataError("empty candidate set");
  if (n == 0) throw DataError("empty candidate set");
  n = std::min(n, corpus.documents.size());
  auto candidates = rank_all(query_emb, corpus);
  candidates.resize(n);
  if (tau == 0.0) return candidates.front().doc_id;  // already tie-broken

  std::vector<double> scores;
  scores.reserve(n);
  for (const auto& c : candidates) scores.push_back(c.score);
  auto probs = boltzmann_probs(scores, tau);

  Rng rng(seed);
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return candidates[i].doc_id;
  }
  return candidates.back().doc_id;
}

Vec project_query(const Vec& q, const ProjectionSpec& spec) {
  const Vec& p = spec.bias_direction;
  if (p.size() != q.size())
    throw DimensionMismatchError(int(q.size()), int(p.size()));
  double p2 = p.squaredNorm();
  if (p2 == 0.0) throw DataError("zero bias direction");
  double coeff = q.dot(p) / p2;
  return q + (spec.alpha - 1.0) * coeff * p;
}

}  // namespace ragbias
