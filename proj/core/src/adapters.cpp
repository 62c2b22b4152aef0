#include "ragbias/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "ragbias/rng.hpp"

namespace ragbias {

using nlohmann::json;

AdapterStack AdapterStack::identity(int dim, int layers) {
  AdapterStack stack;
  stack.weights.assign(std::size_t(layers), Mat::Identity(dim, dim));
  stack.biases.assign(std::size_t(layers), Vec::Zero(dim));
  stack.trainable.assign(std::size_t(layers), true);
  return stack;
}

void AdapterStack::validate() const {
  if (weights.size() != biases.size() || weights.size() != trainable.size())
    throw DataError("adapter stack layer lists disagree in length");
  int d = dim();
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (weights[l].rows() != d || weights[l].cols() != d ||
        biases[l].size() != d)
      throw DimensionMismatchError(d, int(weights[l].rows()));
  }
}

Vec AdapterStack::forward(const Vec& emb) const {
  if (int(emb.size()) != dim())
    throw DimensionMismatchError(dim(), int(emb.size()));
  Vec x = emb;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    x = weights[l] * x + biases[l];
  }
  return x;
}

AdapterGrad AdapterGrad::zeros_like(const AdapterStack& stack) {
  AdapterGrad grad;
  int d = stack.dim();
  grad.d_weights.assign(stack.layer_count(), Mat::Zero(d, d));
  grad.d_biases.assign(stack.layer_count(), Vec::Zero(d));
  return grad;
}

std::string TrainConfig::method_name() const {
  switch (method) {
    case TrainMethod::Full:
      return "full";
    case TrainMethod::Peft:
      return "peft" + std::to_string(peft_layers);
    case TrainMethod::WiseFt: {
      std::ostringstream os;
      os << "wise" << wise_lambda;
      return os.str();
    }
  }
  return "unknown";
}

void PairSet::validate() const {
  if (entries.empty()) throw DataError("empty pair set");
  for (const auto& entry : entries) {
    if (entry.positives.empty() || entry.negatives.empty()) {
      throw DataError("query \"" + entry.query_id +
                      "\" needs at least one positive and one negative");
    }
  }
}

namespace {

struct ForwardCache {
  std::vector<Vec> activations;  // x_0 .. x_L
};

ForwardCache forward_cached(const AdapterStack& stack, const Vec& emb) {
  ForwardCache cache;
  cache.activations.reserve(stack.layer_count() + 1);
  cache.activations.push_back(emb);
  for (std::size_t l = 0; l < stack.layer_count(); ++l) {
    cache.activations.push_back(stack.weights[l] * cache.activations.back() +
                                stack.biases[l]);
  }
  return cache;
}

// Per-entry loss, optionally accumulating dLoss/dq into *grad_q.
double entry_loss(const AdapterStack& stack, const PairSet::Entry& entry,
                  double tau, const Vec& q, Vec* grad_q) {
  double qn = q.norm();
  if (qn == 0.0) throw DataError("adapted query embedding is zero");

  std::size_t p_count = entry.positives.size();
  std::size_t total = p_count + entry.negatives.size();
  std::vector<double> logits(total);
  std::vector<const Vec*> docs(total);
  for (std::size_t i = 0; i < total; ++i) {
    docs[i] = (i < p_count) ? &entry.positives[i]
                            : &entry.negatives[i - p_count];
    double dn = docs[i]->norm();
    if (dn == 0.0) throw DataError("document embedding is zero");
    logits[i] = q.dot(*docs[i]) / (qn * dn) / tau;
  }
  double max_logit = *std::max_element(logits.begin(), logits.end());
  double sum_pos = 0.0, sum_all = 0.0;
  std::vector<double> expv(total);
  for (std::size_t i = 0; i < total; ++i) {
    expv[i] = std::exp(logits[i] - max_logit);
    sum_all += expv[i];
    if (i < p_count) sum_pos += expv[i];
  }
  double loss = std::log(sum_all) - std::log(sum_pos);

  if (grad_q) {
    for (std::size_t i = 0; i < total; ++i) {
      double dl_dlogit = expv[i] / sum_all;
      if (i < p_count) dl_dlogit -= expv[i] / sum_pos;
      const Vec& d = *docs[i];
      double dn = d.norm();
      double cos_qd = q.dot(d) / (qn * dn);
      // d cos / d q = d/(|q||d|) - cos * q/|q|^2
      grad_q->noalias() +=
          (dl_dlogit / tau) * (d / (qn * dn) - (cos_qd / (qn * qn)) * q);
    }
  }
  return loss;
}

}  // namespace

double contrastive_loss(const AdapterStack& stack, const PairSet& pairs,
                        double tau_loss) {
  if (tau_loss <= 0.0) throw DataError("temperature must be positive");
  pairs.validate();
  double total = 0.0;
  for (const auto& entry : pairs.entries) {
    Vec q = stack.forward(entry.query_emb);
    total += entry_loss(stack, entry, tau_loss, q, nullptr);
  }
  return total / double(pairs.entries.size());
}

AdapterGrad contrastive_grad(const AdapterStack& stack, const PairSet& pairs,
                             double tau_loss) {
  if (tau_loss <= 0.0) throw DataError("temperature must be positive");
  pairs.validate();
  AdapterGrad grad = AdapterGrad::zeros_like(stack);
  double inv_n = 1.0 / double(pairs.entries.size());
  std::size_t layers = stack.layer_count();
  for (const auto& entry : pairs.entries) {
    ForwardCache cache = forward_cached(stack, entry.query_emb);
    const Vec& q = cache.activations.back();
    Vec g = Vec::Zero(q.size());
    entry_loss(stack, entry, tau_loss, q, &g);
    g *= inv_n;
    // backprop through the affine layers; frozen layers still pass g along
    for (std::size_t l = layers; l-- > 0;) {
      if (stack.trainable[l]) {
        grad.d_weights[l].noalias() += g * cache.activations[l].transpose();
        grad.d_biases[l] += g;
      }
      g = stack.weights[l].transpose() * g;
    }
  }
  return grad;
}

AdapterStack wise_ft_merge(const AdapterStack& base,
                           const AdapterStack& fine_tuned, double lambda) {
  if (lambda < 0.0 || lambda > 1.0)
    throw DataError("interpolation coefficient must be in [0, 1]");
  if (base.layer_count() != fine_tuned.layer_count() ||
      base.dim() != fine_tuned.dim())
    throw DataError("adapter shapes do not match");
  AdapterStack merged = base;
  for (std::size_t l = 0; l < base.layer_count(); ++l) {
    merged.weights[l] =
        (1.0 - lambda) * base.weights[l] + lambda * fine_tuned.weights[l];
    merged.biases[l] =
        (1.0 - lambda) * base.biases[l] + lambda * fine_tuned.biases[l];
  }
  return merged;
}

TrainResult train_adapter(const TrainConfig& config, const PairSet& pairs) {
  pairs.validate();
  int dim = int(pairs.entries.front().query_emb.size());
  const int layer_count = 4;

  AdapterStack stack = AdapterStack::identity(dim, layer_count);
  if (config.method == TrainMethod::Peft) {
    if (config.peft_layers < 1 || config.peft_layers > layer_count)
      throw ConfigError("peft layer count out of range");
    for (int l = 0; l < layer_count; ++l)
      stack.trainable[std::size_t(l)] = (l >= layer_count - config.peft_layers);
  }
  AdapterStack base = stack;

  TrainResult result;
  if (config.epochs < 0) throw ConfigError("negative epoch count");

  // AdamW state
  AdapterGrad m = AdapterGrad::zeros_like(stack);
  AdapterGrad v = AdapterGrad::zeros_like(stack);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    AdapterGrad grad = contrastive_grad(stack, pairs, config.tau_loss);
    double bc1 = 1.0 - std::pow(config.beta1, epoch);
    double bc2 = 1.0 - std::pow(config.beta2, epoch);
    for (std::size_t l = 0; l < stack.layer_count(); ++l) {
      if (!stack.trainable[l]) continue;
      auto step = [&](auto& param, auto& m_l, auto& v_l, const auto& g) {
        m_l = config.beta1 * m_l + (1.0 - config.beta1) * g;
        v_l = config.beta2 * v_l + (1.0 - config.beta2) * g.cwiseProduct(g);
        param = (param.array() -
                 config.learning_rate *
                     ((m_l / bc1).array() /
                          ((v_l / bc2).array().sqrt() + config.adam_eps) +
                      config.weight_decay * param.array()))
                    .matrix();
      };
      step(stack.weights[l], m.d_weights[l], v.d_weights[l], grad.d_weights[l]);
      step(stack.biases[l], m.d_biases[l], v.d_biases[l], grad.d_biases[l]);
    }
    double loss = contrastive_loss(stack, pairs, config.tau_loss);
    if (!std::isfinite(loss)) {
      throw InfeasibleError("training diverged at epoch " +
                            std::to_string(epoch));
    }
    result.history.push_back(loss);
  }

  if (config.method == TrainMethod::WiseFt) {
    stack = wise_ft_merge(base, stack, config.wise_lambda);
  }
  result.stack = std::move(stack);
  return result;
}

std::vector<TrainConfig> sweep_grid(const std::vector<double>& learning_rates,
                                    const std::vector<int>& epoch_counts,
                                    double tau_loss, std::uint64_t seed) {
  std::vector<TrainConfig> grid;
  std::vector<TrainConfig> methods;
  {
    TrainConfig full;
    full.method = TrainMethod::Full;
    methods.push_back(full);
    for (int l = 1; l <= 4; ++l) {
      TrainConfig peft;
      peft.method = TrainMethod::Peft;
      peft.peft_layers = l;
      methods.push_back(peft);
    }
    for (double lambda : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      TrainConfig wise;
      wise.method = TrainMethod::WiseFt;
      wise.wise_lambda = lambda;
      methods.push_back(wise);
    }
  }
  for (double lr : learning_rates) {
    for (int epochs : epoch_counts) {
      for (TrainConfig cfg : methods) {
        cfg.learning_rate = lr;
        cfg.epochs = epochs;
        cfg.tau_loss = tau_loss;
        cfg.seed = seed;
        grid.push_back(cfg);
      }
    }
  }
  return grid;
}

void save_adapter(const AdapterStack& stack, const std::string& path,
                  const std::string& config_hash, std::uint64_t seed) {
  json j;
  j["dimension"] = stack.dim();
  json layers = json::array();
  for (std::size_t l = 0; l < stack.layer_count(); ++l) {
    json layer;
    json w = json::array();
    for (int r = 0; r < stack.weights[l].rows(); ++r) {
      json row = json::array();
      for (int c = 0; c < stack.weights[l].cols(); ++c)
        row.push_back(stack.weights[l](r, c));
      w.push_back(row);
    }
    layer["W"] = w;
    json b = json::array();
    for (int r = 0; r < stack.biases[l].size(); ++r)
      b.push_back(stack.biases[l][r]);
    layer["b"] = b;
    layer["trainable"] = bool(stack.trainable[l]);
    layers.push_back(layer);
  }
  j["layers"] = layers;
  j["provenance"] = {{"config_hash", config_hash},
                     {"seed", seed},
                     {"generator", kGeneratorId}};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write adapter checkpoint " + path);
  out << j.dump(2) << "\n";
}

AdapterStack load_adapter(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open adapter checkpoint " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DataError("malformed adapter checkpoint " + path);
  int dim = j.at("dimension").get<int>();
  AdapterStack stack;
  for (const auto& layer : j.at("layers")) {
    const auto& w = layer.at("W");
    Mat W(dim, dim);
    if (int(w.size()) != dim) throw DimensionMismatchError(dim, int(w.size()));
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c) W(r, c) = w[r][c].get<double>();
    const auto& b = layer.at("b");
    Vec bias(dim);
    for (int r = 0; r < dim; ++r) bias[r] = b[r].get<double>();
    stack.weights.push_back(std::move(W));
    stack.biases.push_back(std::move(bias));
    stack.trainable.push_back(layer.value("trainable", true));
  }
  stack.validate();
  return stack;
}

}  // namespace ragbias
