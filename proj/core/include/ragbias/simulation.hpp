#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragbias/adapters.hpp"
#include "ragbias/embedder.hpp"
#include "ragbias/io.hpp"
#include "ragbias/types.hpp"

namespace ragbias {

struct WorldConfig {
  int dimension = 64;
  int docs_per_group_per_query = 1;  // corpus size = 2 * this * n_queries
  int n_queries = 500;
  std::uint64_t bias_direction_seed = 7;
  double cluster_spread = 0.25;  // sd of per-document noise
  double doc_offset = 0.3;       // displacement of documents along +/- p
  double query_bias = 0.3;       // query component along p; sign sets base E_b
  std::uint64_t seed = 1;

  void validate() const;
};

struct World {
  Corpus corpus;
  std::vector<Query> queries;
  Vec bias_direction;  // p
  Qrels qrels;         // each query's own documents, grade 1
};

// Unit-direction clusters: each query direction carries
// docs_per_group_per_query documents displaced +p (g1) and -p (g2).
// Deterministic per config.
World gen_world(const WorldConfig& cfg);

struct EmbedderFamily {
  std::vector<EmbedderModel> members;
};

// One projected embedder per alpha over the bias direction p. Measured
// E_b on the generating world is monotone non-decreasing in alpha when
// queries carry a positive component along p.
EmbedderFamily gen_embedder_family(const Vec& p,
                                   const std::vector<double>& alphas);

std::vector<double> linspace(double lo, double hi, int n);

// Label-oracle pair mining for synthetic worlds: candidates are the
// top-k retrievals for the raw query and for the query steered toward
// each group (+/- steer along p); positives are g1-exclusive documents,
// negatives g2-exclusive.
PairSet gen_pairs(const World& world, int k_per_steer = 3, double steer = 1.0);

}  // namespace ragbias
