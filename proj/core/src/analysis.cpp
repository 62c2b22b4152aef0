#include "ragbias/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "ragbias/rng.hpp"

namespace ragbias {

LinearBiasFit fit_linear(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 2) throw DataError("linear fit needs at least 2 points");
  double n = double(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : points) {
    sx += x;
    sy += y;
  }
  double mx = sx / n;
  double my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw InfeasibleError("degenerate design: all E_b equal");

  LinearBiasFit fit;
  fit.n_points = points.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& [x, y] : points) {
    double r = y - (fit.slope * x + fit.intercept);
    ss_res += r * r;
  }
  fit.r_squared = (syy == 0.0) ? 1.0 : 1.0 - ss_res / syy;
  fit.residual_sd =
      (points.size() > 2) ? std::sqrt(ss_res / (n - 2.0)) : std::sqrt(ss_res);
  return fit;
}

double optimal_bias(const LinearBiasFit& fit, double s_min) {
  if (std::abs(fit.slope) < s_min) {
    throw InfeasibleError(
        "insensitive system: |s| < " + std::to_string(s_min) +
        ", embedder-side debiasing infeasible");
  }
  return -fit.intercept / fit.slope;
}

std::string select_optimal(const std::vector<EmbedderCandidate>& candidates) {
  if (candidates.empty()) throw DataError("no embedder candidates");
  const EmbedderCandidate* best = &candidates.front();
  for (const auto& c : candidates) {
    double cr = std::abs(c.rag_bias);
    double br = std::abs(best->rag_bias);
    if (cr < br) {
      best = &c;
    } else if (cr == br) {
      double ce = std::abs(c.embedder_bias);
      double be = std::abs(best->embedder_bias);
      if (ce < be || (ce == be && c.embedder_id < best->embedder_id)) best = &c;
    }
  }
  return best->embedder_id;
}

std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& points,
                                         double target_bias) {
  if (points.empty()) throw DataError("empty Pareto input");
  auto dist = [&](const ParetoPoint& p) { return std::abs(p.bias - target_bias); };
  std::vector<ParetoPoint> frontier;
  for (const auto& p : points) {
    bool dominated = false;
    for (const auto& q : points) {
      bool better_or_equal = dist(q) <= dist(p) && q.accuracy >= p.accuracy;
      bool strictly_better = dist(q) < dist(p) || q.accuracy > p.accuracy;
      if (&q != &p && better_or_equal && strictly_better) {
        dominated = true;
        break;
      }
    }
    if (!dominated) frontier.push_back(p);
  }
  std::sort(frontier.begin(), frontier.end(),
            [&](const ParetoPoint& a, const ParetoPoint& b) {
              if (dist(a) != dist(b)) return dist(a) < dist(b);
              return a.embedder_id < b.embedder_id;
            });
  return frontier;
}

Corpus rebalance_corpus(const Corpus& corpus, double target_cb,
                        std::uint64_t seed) {
  if (target_cb < -1.0 || target_cb > 1.0)
    throw ConfigError("target corpus bias must be in [-1, 1]");
  std::vector<std::size_t> g1_pool, g2_pool;
  for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
    const auto& doc = corpus.documents[i];
    if (!doc.labels) throw DataError("document \"" + doc.id + "\" is unlabeled");
    if (*doc.labels == GroupLabel{1, 0}) g1_pool.push_back(i);
    if (*doc.labels == GroupLabel{0, 1}) g2_pool.push_back(i);
  }
  std::size_t available_g1 = g1_pool.size();
  std::size_t available_g2 = g2_pool.size();

  // Largest total n with counts a + b = n, |(a - b)/n - target| <= 1/n.
  std::size_t best_n = 0, best_a = 0;
  for (std::size_t n = available_g1 + available_g2; n >= 1; --n) {
    double ideal_a = double(n) * (1.0 + target_cb) / 2.0;
    long a = std::lround(ideal_a);
    a = std::max(0L, std::min(long(n), a));
    if (std::size_t(a) > available_g1) a = long(available_g1);
    if (n - std::size_t(a) > available_g2) a = long(n - available_g2);
    if (a < 0 || std::size_t(a) > available_g1 ||
        n - std::size_t(a) > available_g2)
      continue;
    double achieved = (2.0 * double(a) - double(n)) / double(n);
    if (std::abs(achieved - target_cb) <= 1.0 / double(n) + 1e-12) {
      best_n = n;
      best_a = std::size_t(a);
      break;
    }
  }
  if (best_n == 0) {
    throw InfeasibleError("target corpus bias infeasible for pool (" +
                          std::to_string(available_g1) + " g1, " +
                          std::to_string(available_g2) + " g2)");
  }

  Rng rng(seed);
  std::shuffle(g1_pool.begin(), g1_pool.end(), rng.engine());
  std::shuffle(g2_pool.begin(), g2_pool.end(), rng.engine());
  g1_pool.resize(best_a);
  g2_pool.resize(best_n - best_a);
  std::vector<std::size_t> keep;
  keep.insert(keep.end(), g1_pool.begin(), g1_pool.end());
  keep.insert(keep.end(), g2_pool.begin(), g2_pool.end());
  std::sort(keep.begin(), keep.end());  // preserve corpus order

  Corpus result;
  result.dimension = corpus.dimension;
  result.task = corpus.task;
  result.documents.reserve(keep.size());
  for (auto i : keep) result.documents.push_back(corpus.documents[i]);
  return result;
}

std::vector<CorpusSweepRow> corpus_sweep(
    const LlmSpec& llm, const std::vector<EmbedderModel>& embedders,
    const Corpus& corpus, const std::vector<Query>& queries, Judge* judge,
    const std::vector<double>& target_grid, std::uint64_t seed) {
  std::vector<CorpusSweepRow> rows;
  for (std::size_t t = 0; t < target_grid.size(); ++t) {
    Corpus rebalanced =
        rebalance_corpus(corpus, target_grid[t], derive_seed(seed, t));
    double actual = corpus_bias(rebalanced).value;
    for (const auto& embedder : embedders) {
      ComponentBias rb =
          rag_bias(llm, embedder, rebalanced, queries, judge, seed);
      rows.push_back({embedder.id, target_grid[t], actual, rb.value});
    }
  }
  return rows;
}

double ndcg_at_1(const std::vector<std::pair<std::string, std::string>>& run,
                 const Qrels& qrels) {
  if (run.empty()) throw DataError("empty run");
  auto gain = [](int grade) { return std::exp2(double(grade)) - 1.0; };
  double total = 0.0;
  for (const auto& [query_id, doc_id] : run) {
    auto it = qrels.grades.find(query_id);
    if (it == qrels.grades.end()) {
      throw DataError("query \"" + query_id + "\" missing from qrels");
    }
    int grade = 0;
    auto doc_it = it->second.find(doc_id);
    if (doc_it != it->second.end()) grade = doc_it->second;
    int max_grade = 0;
    for (const auto& [d, g] : it->second) max_grade = std::max(max_grade, g);
    total += (max_grade > 0) ? gain(grade) / gain(max_grade) : 0.0;
  }
  return total / double(run.size());
}

namespace {

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return char(std::tolower(c));
  });
  return out;
}

}  // namespace

double qa_accuracy(const std::vector<std::string>& outputs,
                   const std::vector<std::string>& golds, TaskType task) {
  if (outputs.size() != golds.size())
    throw DataError("outputs and golds differ in length");
  if (outputs.empty()) throw DataError("empty accuracy input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (task == TaskType::BinaryChoice) {
      if (outputs[i] == golds[i]) ++hits;
    } else {
      if (lowercase(outputs[i]).find(lowercase(golds[i])) !=
          std::string::npos)
        ++hits;
    }
  }
  return double(hits) / double(outputs.size());
}

}  // namespace ragbias
