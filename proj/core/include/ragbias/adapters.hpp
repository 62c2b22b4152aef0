#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragbias/types.hpp"

namespace ragbias {

// Stack of affine layers x -> W x + b over a frozen base embedding.
// An all-identity, zero-bias stack is the neutral adapter.
struct AdapterStack {
  std::vector<Mat> weights;
  std::vector<Vec> biases;
  std::vector<bool> trainable;  // per layer

  static AdapterStack identity(int dim, int layers = 4);

  int dim() const { return weights.empty() ? 0 : int(weights[0].rows()); }
  std::size_t layer_count() const { return weights.size(); }
  void validate() const;

  Vec forward(const Vec& emb) const;
};

// Gradients with the same layer shapes as the stack; frozen layers hold zeros.
struct AdapterGrad {
  std::vector<Mat> d_weights;
  std::vector<Vec> d_biases;

  static AdapterGrad zeros_like(const AdapterStack& stack);
};

enum class TrainMethod { Full, Peft, WiseFt };

struct TrainConfig {
  double learning_rate = 1e-2;  // desk-scale default; paper grid {3e-5, 1e-5}
  int epochs = 15;
  double tau_loss = 50.0;  // literal Eq.-style temperature; 0.05 in fixtures
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  TrainMethod method = TrainMethod::Full;
  int peft_layers = 1;     // trainable suffix length for Peft
  double wise_lambda = 0.5;  // interpolation coefficient for WiseFt

  std::string method_name() const;
};

// Per-query positives and negatives, stored as frozen document embeddings.
struct PairSet {
  struct Entry {
    std::string query_id;
    Vec query_emb;                   // base embedding, adapter applies on top
    std::vector<Vec> positives;
    std::vector<Vec> negatives;
  };
  std::vector<Entry> entries;

  void validate() const;  // every entry needs >= 1 positive and >= 1 negative
};

// Mean over queries of -log( sum_k e^{cos(q,d+_k)/tau} /
//   (sum_k e^{cos(q,d+_k)/tau} + sum_j e^{cos(q,d-_j)/tau}) ),
// with q = stack.forward(query_emb).
double contrastive_loss(const AdapterStack& stack, const PairSet& pairs,
                        double tau_loss);

// Exact gradient of contrastive_loss w.r.t. trainable parameters.
AdapterGrad contrastive_grad(const AdapterStack& stack, const PairSet& pairs,
                             double tau_loss);

struct TrainResult {
  AdapterStack stack;
  std::vector<double> history;  // loss after each epoch
};

// Full-batch AdamW; deterministic per config. WiseFt trains fully then
// merges with the identity initialization at wise_lambda.
TrainResult train_adapter(const TrainConfig& config, const PairSet& pairs);

// Elementwise (1-lambda) base + lambda fine_tuned.
AdapterStack wise_ft_merge(const AdapterStack& base,
                           const AdapterStack& fine_tuned, double lambda);

// Checkpoint serialization: dims, per-layer matrices/biases, trainable
// mask, provenance (config hash, seed).
void save_adapter(const AdapterStack& stack, const std::string& path,
                  const std::string& config_hash = "", std::uint64_t seed = 0);
AdapterStack load_adapter(const std::string& path);

// One row of the fine-tuning sweep output.
struct SweepRecord {
  std::string run_id;
  std::string method;
  double learning_rate = 0.0;
  int epochs = 0;
  double final_loss = 0.0;
  double validation_bias = 0.0;  // E_b on the validation corpus
  double accuracy = 0.0;
  AdapterStack stack;
};

// The 60-run grid: {full, peft(1..4), wise_ft(lambda in {.1,.3,.5,.7,.9})}
// x learning rates x epoch counts.
std::vector<TrainConfig> sweep_grid(const std::vector<double>& learning_rates,
                                    const std::vector<int>& epoch_counts,
                                    double tau_loss, std::uint64_t seed);

}  // namespace ragbias
