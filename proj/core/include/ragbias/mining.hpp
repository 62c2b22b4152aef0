#pragma once

#include <vector>

#include "ragbias/adapters.hpp"
#include "ragbias/embedder.hpp"
#include "ragbias/llm.hpp"
#include "ragbias/types.hpp"

namespace ragbias {

struct MiningResult {
  PairSet pairs;
  std::size_t dropped_queries = 0;  // no positives or no negatives
};

// Candidate selection for contrastive training: per query, the union of
// top-k retrievals for the raw text and for each of the two steering
// rewrites, from each corpus. The judge labels every candidate;
// g1-exclusive documents become positives, g2-exclusive negatives, and
// (0,0)/(1,1) candidates are excluded. Queries left without either side
// are dropped and counted.
MiningResult select_training_pairs(const std::vector<Query>& queries,
                                   const std::vector<Corpus>& corpora,
                                   TextEmbedder& embedder, Judge& judge,
                                   TaskType task, int k_per_steer = 3);

}  // namespace ragbias
