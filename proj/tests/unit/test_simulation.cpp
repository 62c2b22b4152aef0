#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "ragbias/bias.hpp"
#include "ragbias/io.hpp"
#include "ragbias/simulation.hpp"

using namespace ragbias;

namespace {

WorldConfig small_world() {
  WorldConfig cfg;
  cfg.dimension = 16;
  cfg.docs_per_group_per_query = 1;
  cfg.n_queries = 60;
  cfg.cluster_spread = 0.05;
  cfg.doc_offset = 0.3;
  cfg.query_bias = 0.3;
  cfg.seed = 2;
  return cfg;
}

}  // namespace

TEST_CASE("world config validation") {
  WorldConfig cfg = small_world();
  CHECK_NOTHROW(cfg.validate());
  cfg.dimension = 1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_world();
  cfg.n_queries = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_world();
  cfg.cluster_spread = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = small_world();
  cfg.docs_per_group_per_query = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("linspace endpoints and spacing") {
  auto g = linspace(0.0, 1.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g[0] == doctest::Approx(0.0));
  CHECK(g[1] == doctest::Approx(0.25));
  CHECK(g[4] == doctest::Approx(1.0));
  auto single = linspace(2.0, 2.0, 1);
  REQUIRE(single.size() == 1);
  CHECK(single[0] == doctest::Approx(2.0));
}

TEST_CASE("generated worlds are deterministic and balanced") {
  WorldConfig cfg = small_world();
  World a = gen_world(cfg);
  World b = gen_world(cfg);

  std::ostringstream sa, sb;
  write_corpus(a.corpus, sa);
  write_corpus(b.corpus, sb);
  CHECK(sa.str() == sb.str());

  CHECK(a.queries.size() == 60);
  CHECK(a.corpus.documents.size() == 120);
  CHECK(a.corpus.dimension == 16);
  CHECK(corpus_bias(a.corpus).value == doctest::Approx(0.0));
  CHECK(std::abs(a.bias_direction.norm() - 1.0) < 1e-9);

  // every query's own documents carry grade 1
  const auto& grades = a.qrels.grades.at(a.queries.front().id);
  CHECK(grades.size() == 2);
  for (const auto& [doc_id, grade] : grades) CHECK(grade == 1);

  // a different seed moves the embeddings
  cfg.seed = 3;
  std::ostringstream sc;
  write_corpus(gen_world(cfg).corpus, sc);
  CHECK(sc.str() != sa.str());
}

TEST_CASE("bias direction is shared across seeds by design") {
  WorldConfig cfg = small_world();
  World a = gen_world(cfg);
  cfg.seed = 99;
  World b = gen_world(cfg);
  CHECK((a.bias_direction - b.bias_direction).norm() < 1e-12);
  cfg.bias_direction_seed = 8;
  World c = gen_world(cfg);
  CHECK((a.bias_direction - c.bias_direction).norm() > 1e-3);
}

TEST_CASE("projection family sweeps embedder bias monotonically") {
  World world = gen_world(small_world());
  EmbedderFamily family =
      gen_embedder_family(world.bias_direction, {-2.0, 0.0, 1.0, 2.0});
  REQUIRE(family.members.size() == 4);

  std::vector<double> eb;
  for (const auto& member : family.members)
    eb.push_back(embedder_bias(member, world.queries, world.corpus).value);

  CHECK(eb[0] < -0.9);        // strongly reversed component
  CHECK(std::abs(eb[1]) < 0.5);  // component removed: noise decides
  CHECK(eb[2] > 0.9);
  for (std::size_t i = 1; i < eb.size(); ++i) CHECK(eb[i - 1] <= eb[i]);

  // alpha = 1 leaves queries untouched, matching the base embedder exactly
  ComponentBias base = embedder_bias(EmbedderModel{}, world.queries,
                                     world.corpus);
  CHECK(eb[2] == base.value);
}

TEST_CASE("family member ids encode the alpha value") {
  EmbedderFamily family = gen_embedder_family(
      gen_world(small_world()).bias_direction, {0.5, -1.25});
  CHECK(family.members[0].id == "proj_a0.5000");
  CHECK(family.members[1].id == "proj_a-1.2500");
  REQUIRE(family.members[0].projection.has_value());
  CHECK(family.members[0].projection->alpha == doctest::Approx(0.5));
}

TEST_CASE("mined pairs are valid and grounded in the world's labels") {
  World world = gen_world(small_world());
  PairSet pairs = gen_pairs(world, 3, 1.0);
  CHECK_NOTHROW(pairs.validate());
  CHECK(!pairs.entries.empty());
  CHECK(pairs.entries.size() <= world.queries.size());
  for (const auto& entry : pairs.entries) {
    CHECK(!entry.positives.empty());
    CHECK(!entry.negatives.empty());
    CHECK(entry.query_emb.size() == 16);
    // positives sit on the +p side of the bias direction, negatives on -p
    for (const auto& pos : entry.positives)
      CHECK(pos.dot(world.bias_direction) > 0.0);
    for (const auto& neg : entry.negatives)
      CHECK(neg.dot(world.bias_direction) < 0.0);
  }
}
