#include "ragbias/simulation.hpp"

#include <algorithm>
#include <set>

#include "ragbias/retrieval.hpp"
#include "ragbias/rng.hpp"

namespace ragbias {

void WorldConfig::validate() const {
  if (dimension < 2) throw ConfigError("world dimension must be >= 2");
  if (docs_per_group_per_query < 1 || n_queries < 1)
    throw ConfigError("world counts must be >= 1");
  if (cluster_spread < 0.0) throw ConfigError("cluster_spread must be >= 0");
}

namespace {

Vec random_unit(Rng& rng, int dim) {
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();
  double n = v.norm();
  if (n == 0.0) v[0] = 1.0;
  return v / std::max(n, 1e-12);
}

// Component of v orthogonal to unit vector p, renormalized.
Vec orthogonal_unit(Rng& rng, const Vec& p) {
  Vec v = random_unit(rng, int(p.size()));
  v -= v.dot(p) * p;
  double n = v.norm();
  while (n < 1e-9) {
    v = random_unit(rng, int(p.size()));
    v -= v.dot(p) * p;
    n = v.norm();
  }
  return v / n;
}

}  // namespace

World gen_world(const WorldConfig& cfg) {
  cfg.validate();
  World world;
  Rng dir_rng(cfg.bias_direction_seed);
  world.bias_direction = random_unit(dir_rng, cfg.dimension);
  const Vec& p = world.bias_direction;

  Rng rng(cfg.seed);
  world.corpus.dimension = cfg.dimension;
  world.corpus.task = TaskType::NameGeneration;

  for (int qi = 0; qi < cfg.n_queries; ++qi) {
    Vec base = orthogonal_unit(rng, p);
    Query query;
    query.id = "q" + std::to_string(qi);
    query.text = "synthetic query " + std::to_string(qi);
    query.embedding = base + cfg.query_bias * p;
    world.queries.push_back(std::move(query));

    for (int m = 0; m < cfg.docs_per_group_per_query; ++m) {
      for (int group = 0; group < 2; ++group) {
        Document doc;
        doc.id = "d" + std::to_string(qi) + "_" +
                 (group == 0 ? std::string("g1_") : std::string("g2_")) +
                 std::to_string(m);
        doc.text = "synthetic document " + doc.id;
        Vec noise(cfg.dimension);
        for (int i = 0; i < cfg.dimension; ++i) noise[i] = rng.normal();
        double offset = (group == 0) ? cfg.doc_offset : -cfg.doc_offset;
        doc.embedding = base + offset * p + cfg.cluster_spread * noise;
        doc.labels = (group == 0) ? GroupLabel{1, 0} : GroupLabel{0, 1};
        world.qrels.grades["q" + std::to_string(qi)][doc.id] = 1;
        world.corpus.documents.push_back(std::move(doc));
      }
    }
  }
  return world;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ConfigError("linspace needs n >= 1");
  std::vector<double> values;
  values.reserve(std::size_t(n));
  if (n == 1) {
    values.push_back(lo);
    return values;
  }
  for (int i = 0; i < n; ++i)
    values.push_back(lo + (hi - lo) * double(i) / double(n - 1));
  return values;
}

EmbedderFamily gen_embedder_family(const Vec& p,
                                   const std::vector<double>& alphas) {
  if (p.size() == 0 || p.isZero(0.0)) throw DataError("zero bias direction");
  if (alphas.empty()) throw ConfigError("embedder family needs >= 1 alpha");
  EmbedderFamily family;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    EmbedderModel member;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "proj_a%.4f", alphas[i]);
    member.id = buf;
    member.projection = ProjectionSpec{p, alphas[i]};
    family.members.push_back(std::move(member));
  }
  return family;
}

PairSet gen_pairs(const World& world, int k_per_steer, double steer) {
  PairSet pairs;
  const Vec& p = world.bias_direction;
  for (const auto& query : world.queries) {
    PairSet::Entry entry;
    entry.query_id = query.id;
    entry.query_emb = query.embedding;

    std::set<std::string> candidate_ids;
    std::vector<Vec> variants = {query.embedding, query.embedding + steer * p,
                                 query.embedding - steer * p};
    for (const auto& variant : variants) {
      auto result = retrieve_topk(
          variant, world.corpus,
          std::min<std::size_t>(std::size_t(k_per_steer),
                                world.corpus.documents.size()),
          query.id);
      for (const auto& scored : result.ranked) candidate_ids.insert(scored.doc_id);
    }
    for (const auto& id : candidate_ids) {
      const Document* doc = world.corpus.find(id);
      if (!doc || !doc->labels) continue;
      if (*doc->labels == GroupLabel{1, 0}) {
        entry.positives.push_back(doc->embedding);
      } else if (*doc->labels == GroupLabel{0, 1}) {
        entry.negatives.push_back(doc->embedding);
      }
    }
    if (!entry.positives.empty() && !entry.negatives.empty()) {
      pairs.entries.push_back(std::move(entry));
    }
  }
  pairs.validate();
  return pairs;
}

}  // namespace ragbias
