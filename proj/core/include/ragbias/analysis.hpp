#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragbias/bias.hpp"
#include "ragbias/io.hpp"
#include "ragbias/types.hpp"

namespace ragbias {

struct LinearBiasFit {
  double slope = 0.0;      // sensitivity s
  double intercept = 0.0;  // fitted L_b + noise offset, reported as-is
  double r_squared = 0.0;
  std::size_t n_points = 0;
  double residual_sd = 0.0;
};

// Ordinary least squares of R_b on E_b. Throws InfeasibleError on a
// degenerate design (all E_b identical).
LinearBiasFit fit_linear(const std::vector<std::pair<double, double>>& points);

// E_b* = -intercept / slope. Throws InfeasibleError when |slope| < s_min
// (embedder-side debiasing infeasible for insensitive systems).
double optimal_bias(const LinearBiasFit& fit, double s_min = 0.05);

struct EmbedderCandidate {
  std::string embedder_id;
  double embedder_bias = 0.0;  // E_b
  double rag_bias = 0.0;       // measured R_b
};

// Candidate minimizing |R_b|; ties by |E_b| then id.
std::string select_optimal(const std::vector<EmbedderCandidate>& candidates);

struct ParetoPoint {
  std::string embedder_id;
  double bias = 0.0;
  double accuracy = 0.0;  // in [0, 1]
};

// Non-dominated set under (minimize |bias - target_bias|, maximize
// accuracy), sorted by bias distance.
std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& points,
                                         double target_bias = 0.0);

// Seeded subsample of group-exclusive documents whose corpus bias is
// within 1/|result| of target. Throws InfeasibleError when the pool
// composition cannot reach the target.
Corpus rebalance_corpus(const Corpus& corpus, double target_cb,
                        std::uint64_t seed);

struct CorpusSweepRow {
  std::string embedder_id;
  double target_cb = 0.0;
  double actual_cb = 0.0;
  double rag_bias = 0.0;
};

std::vector<CorpusSweepRow> corpus_sweep(
    const LlmSpec& llm, const std::vector<EmbedderModel>& embedders,
    const Corpus& corpus, const std::vector<Query>& queries, Judge* judge,
    const std::vector<double>& target_grid, std::uint64_t seed);

// With binary relevance this is the mean top-1 relevance; with graded
// relevance, exp2 gain of the top-1 over the best single-document gain.
double ndcg_at_1(const std::vector<std::pair<std::string, std::string>>& run,
                 const Qrels& qrels);

// Binary-choice: exact letter match. Name-generation: case-insensitive
// containment of a gold alias in the output.
double qa_accuracy(const std::vector<std::string>& outputs,
                   const std::vector<std::string>& golds, TaskType task);

}  // namespace ragbias
