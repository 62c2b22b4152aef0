#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <tuple>

#include "helpers.hpp"
#include "ragbias/analysis.hpp"
#include "ragbias/rng.hpp"

using namespace ragbias;
using testutil::vec;

TEST_CASE("linear fit recovers exact lines") {
  LinearBiasFit fit = fit_linear({{0, 1}, {1, 2}});
  CHECK(fit.slope == doctest::Approx(1.0));
  CHECK(fit.intercept == doctest::Approx(1.0));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.n_points == 2);

  std::vector<std::pair<double, double>> points;
  for (int i = 0; i < 20; ++i) {
    double x = -1.0 + 2.0 * i / 19.0;
    points.emplace_back(x, 0.4 * x - 0.1);
  }
  LinearBiasFit exact = fit_linear(points);
  CHECK(std::abs(exact.slope - 0.4) < 1e-9);
  CHECK(std::abs(exact.intercept + 0.1) < 1e-9);
  CHECK(std::abs(exact.r_squared - 1.0) < 1e-9);
  CHECK(exact.residual_sd < 1e-9);
}

TEST_CASE("linear fit rejects degenerate designs") {
  CHECK_THROWS_AS(fit_linear({{0.5, 1}, {0.5, 2}, {0.5, 3}}),
                  InfeasibleError);
  CHECK_THROWS_AS(fit_linear({{0.5, 1}}), DataError);
}

TEST_CASE("linear fit matches a closed-form least-squares oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<double, double>> points;
    int n = 5 + int(rng.next() % 20);
    for (int i = 0; i < n; ++i)
      points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1));

    // normal equations evaluated with plain accumulators
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : points) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    double denom = n * sxx - sx * sx;
    double slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - slope * sx) / n;
    double ss_res = 0, ss_tot = 0;
    for (auto& [x, y] : points) {
      ss_res += (y - slope * x - intercept) * (y - slope * x - intercept);
      ss_tot += (y - sy / n) * (y - sy / n);
    }
    LinearBiasFit fit = fit_linear(points);
    CHECK(std::abs(fit.slope - slope) < 1e-9);
    CHECK(std::abs(fit.intercept - intercept) < 1e-9);
    CHECK(std::abs(fit.r_squared - (1.0 - ss_res / ss_tot)) < 1e-9);
    CHECK(std::abs(fit.residual_sd - std::sqrt(ss_res / (n - 2))) < 1e-9);
  }
}

TEST_CASE("optimal bias inverts the fitted line") {
  LinearBiasFit fit;
  fit.slope = 0.5;
  fit.intercept = -0.2;
  CHECK(optimal_bias(fit) == doctest::Approx(0.4));
  fit.intercept = 0.0;
  CHECK(optimal_bias(fit) == doctest::Approx(0.0));
  fit.slope = 0.01;
  CHECK_THROWS_AS(optimal_bias(fit), InfeasibleError);
  fit.slope = -0.2;
  fit.intercept = 0.1;
  CHECK(optimal_bias(fit) == doctest::Approx(0.5));
}

TEST_CASE("optimal embedder selection minimizes |R_b| with stated ties") {
  CHECK(select_optimal({{"e1", 0.5, 0.3}, {"e2", 0.1, -0.1}}) == "e2");
  // |R_b| tie resolved by smaller |E_b|
  CHECK(select_optimal({{"e1", 0.5, 0.2}, {"e2", 0.1, -0.2}}) == "e2");
  // full tie resolved by id
  CHECK(select_optimal({{"b", 0.1, 0.2}, {"a", 0.1, 0.2}}) == "a");
  CHECK_THROWS_AS(select_optimal({}), DataError);

  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<EmbedderCandidate> candidates;
    for (int i = 0; i < 12; ++i) {
      candidates.push_back({"e" + std::to_string(i),
                            std::round(rng.uniform(-1, 1) * 4) / 4,
                            std::round(rng.uniform(-1, 1) * 4) / 4});
    }
    auto best = std::min_element(
        candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
          return std::make_tuple(std::abs(a.rag_bias), std::abs(a.embedder_bias),
                                 a.embedder_id) <
                 std::make_tuple(std::abs(b.rag_bias), std::abs(b.embedder_bias),
                                 b.embedder_id);
        });
    CHECK(select_optimal(candidates) == best->embedder_id);
  }
}

TEST_CASE("pareto frontier keeps exactly the non-dominated points") {
  std::vector<ParetoPoint> points = {
      {"a", 0.1, 0.9}, {"b", 0.2, 0.95}, {"c", 0.3, 0.8}};
  auto frontier = pareto_frontier(points, 0.0);
  REQUIRE(frontier.size() == 2);
  CHECK(frontier[0].embedder_id == "a");
  CHECK(frontier[1].embedder_id == "b");

  // a nonzero target re-centers the bias distance
  auto recentered = pareto_frontier(points, 0.3);
  CHECK(recentered[0].embedder_id == "c");

  CHECK_THROWS_AS(pareto_frontier({}, 0.0), DataError);

  Rng rng(33);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ParetoPoint> cloud;
    for (int i = 0; i < 15; ++i)
      cloud.push_back({"p" + std::to_string(i), rng.uniform(-1, 1),
                       rng.uniform(0, 1)});
    auto front = pareto_frontier(cloud, 0.0);
    REQUIRE(!front.empty());
    auto dominated = [](const ParetoPoint& p, const ParetoPoint& q) {
      bool boe = std::abs(q.bias) <= std::abs(p.bias) && q.accuracy >= p.accuracy;
      bool sb = std::abs(q.bias) < std::abs(p.bias) || q.accuracy > p.accuracy;
      return boe && sb;
    };
    for (const auto& p : front)
      for (const auto& q : cloud) CHECK(!dominated(p, q));
    for (std::size_t i = 1; i < front.size(); ++i)
      CHECK(std::abs(front[i - 1].bias) <= std::abs(front[i].bias));
  }
}

namespace {

Corpus labeled_pool(int n_g1, int n_g2) {
  Corpus corpus;
  corpus.dimension = 2;
  for (int i = 0; i < n_g1; ++i)
    corpus.documents.push_back(
        {"a" + std::to_string(i), "", vec({1, 0}), GroupLabel{1, 0}});
  for (int i = 0; i < n_g2; ++i)
    corpus.documents.push_back(
        {"b" + std::to_string(i), "", vec({0, 1}), GroupLabel{0, 1}});
  return corpus;
}

int count_g1(const Corpus& corpus) {
  int n = 0;
  for (const auto& doc : corpus.documents)
    if (doc.labels == GroupLabel{1, 0}) ++n;
  return n;
}

}  // namespace

TEST_CASE("rebalancing hits the target within the resolution bound") {
  Corpus balanced = labeled_pool(176, 176);
  Corpus kept = rebalance_corpus(balanced, 0.0, 5);
  CHECK(kept.documents.size() == 352);  // already on target, keep everything

  Corpus skewed = rebalance_corpus(labeled_pool(100, 100), 0.5, 5);
  CHECK(skewed.documents.size() == 134);  // largest feasible subsample
  CHECK(count_g1(skewed) == 100);

  Corpus pure = rebalance_corpus(labeled_pool(100, 100), 1.0, 5);
  CHECK(pure.documents.size() == 100);
  CHECK(count_g1(pure) == 100);

  CHECK_THROWS_AS(rebalance_corpus(labeled_pool(5, 0), -0.5, 5),
                  InfeasibleError);
  CHECK_THROWS_AS(rebalance_corpus(labeled_pool(5, 5), 1.5, 5), ConfigError);
}

TEST_CASE("rebalanced bias stays within 1/n of target across random pools") {
  Rng rng(34);
  for (int trial = 0; trial < 15; ++trial) {
    int g1 = 20 + int(rng.next() % 80);
    int g2 = 20 + int(rng.next() % 80);
    double target = std::round(rng.uniform(-0.4, 0.4) * 10) / 10;
    Corpus kept = rebalance_corpus(labeled_pool(g1, g2), target, trial);
    double n = double(kept.documents.size());
    double achieved = (2.0 * count_g1(kept) - n) / n;
    CHECK(std::abs(achieved - target) <= 1.0 / n + 1e-12);
  }
}

TEST_CASE("rebalancing is deterministic per seed") {
  Corpus pool = labeled_pool(60, 40);
  Corpus a = rebalance_corpus(pool, -0.1, 11);
  Corpus b = rebalance_corpus(pool, -0.1, 11);
  REQUIRE(a.documents.size() == b.documents.size());
  for (std::size_t i = 0; i < a.documents.size(); ++i)
    CHECK(a.documents[i].id == b.documents[i].id);
}

TEST_CASE("corpus sweep moves rag bias with the corpus at full sensitivity") {
  // unstructured geometry: the top-1 label follows the group mixture
  Rng rng(35);
  const int dim = 40;
  Corpus corpus;
  corpus.dimension = dim;
  corpus.task = TaskType::NameGeneration;
  auto random_vec = [&] {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = rng.normal();
    return v;
  };
  for (int i = 0; i < 100; ++i) {
    corpus.documents.push_back(
        {"a" + std::to_string(i), "", random_vec(), GroupLabel{1, 0}});
    corpus.documents.push_back(
        {"b" + std::to_string(i), "", random_vec(), GroupLabel{0, 1}});
  }
  std::vector<Query> queries;
  for (int i = 0; i < 150; ++i) {
    Query q;
    q.id = "q" + std::to_string(i);
    q.embedding = random_vec();
    queries.push_back(q);
  }
  SyntheticLlm llm;
  llm.params.sensitivity = 1.0;

  auto rows = corpus_sweep(llm, {EmbedderModel{}}, corpus, queries, nullptr,
                           {-0.3, 0.0, 0.3}, 77);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(std::abs(row.actual_cb - row.target_cb) <=
          1.0 / 200.0 + 1e-12);
  }
  CHECK(rows[0].rag_bias < rows[2].rag_bias);
  CHECK(std::abs(rows[0].rag_bias + 0.3) < 0.15);
  CHECK(std::abs(rows[2].rag_bias - 0.3) < 0.15);
}

TEST_CASE("ndcg at 1 with binary and graded relevance") {
  Qrels qrels;
  qrels.grades["q1"] = {{"d1", 1}};
  qrels.grades["q2"] = {{"d2", 1}, {"d3", 0}};
  qrels.grades["q3"] = {{"d4", 1}};
  double score = ndcg_at_1({{"q1", "d1"}, {"q2", "d3"}, {"q3", "d4"}}, qrels);
  CHECK(std::abs(score - 2.0 / 3.0) < 1e-9);

  Qrels graded;
  graded.grades["q1"] = {{"d1", 1}, {"d2", 2}};
  CHECK(ndcg_at_1({{"q1", "d1"}}, graded) == doctest::Approx(1.0 / 3.0));
  CHECK(ndcg_at_1({{"q1", "d2"}}, graded) == doctest::Approx(1.0));
  CHECK(ndcg_at_1({{"q1", "unjudged"}}, graded) == doctest::Approx(0.0));

  CHECK_THROWS_AS(ndcg_at_1({{"missing", "d1"}}, qrels), DataError);
  CHECK_THROWS_AS(ndcg_at_1({}, qrels), DataError);
}

TEST_CASE("qa accuracy handles both answer formats") {
  CHECK(qa_accuracy({"A", "B"}, {"A", "A"}, TaskType::BinaryChoice) ==
        doctest::Approx(0.5));
  CHECK(qa_accuracy({"I believe it was rosa parks."}, {"Rosa Parks"},
                    TaskType::NameGeneration) == doctest::Approx(1.0));
  CHECK(qa_accuracy({"Elvis"}, {"Rosa Parks"}, TaskType::NameGeneration) ==
        doctest::Approx(0.0));
  CHECK_THROWS_AS(qa_accuracy({"A"}, {}, TaskType::BinaryChoice), DataError);
  CHECK_THROWS_AS(qa_accuracy({}, {}, TaskType::BinaryChoice), DataError);
}
