#include "ragbias/mining.hpp"

#include <map>
#include <set>

#include "ragbias/bias.hpp"
#include "ragbias/retrieval.hpp"

namespace ragbias {

MiningResult select_training_pairs(const std::vector<Query>& queries,
                                   const std::vector<Corpus>& corpora,
                                   TextEmbedder& embedder, Judge& judge,
                                   TaskType task, int k_per_steer) {
  if (corpora.empty()) throw ConfigError("pair mining needs >= 1 corpus");
  if (k_per_steer < 1) throw ConfigError("k_per_steer must be >= 1");

  MiningResult result;
  std::map<std::string, GroupLabel> verdict_cache;

  for (const auto& query : queries) {
    PairSet::Entry entry;
    entry.query_id = query.id;
    entry.query_emb = query.embedding.size() > 0
                          ? query.embedding
                          : embedder.embed(query.text);

    std::vector<Vec> variants = {
        entry.query_emb,
        embedder.embed(render_steering_prompt(task, true, query.text)),
        embedder.embed(render_steering_prompt(task, false, query.text))};

    for (const auto& corpus : corpora) {
      std::set<std::string> candidate_ids;
      std::size_t k = std::min<std::size_t>(std::size_t(k_per_steer),
                                            corpus.documents.size());
      if (k == 0) continue;
      for (const auto& variant : variants) {
        auto ranked = retrieve_topk(variant, corpus, k, query.id);
        for (const auto& scored : ranked.ranked)
          candidate_ids.insert(scored.doc_id);
      }
      for (const auto& id : candidate_ids) {
        const Document* doc = corpus.find(id);
        if (!doc) continue;
        auto it = verdict_cache.find(doc->text);
        if (it == verdict_cache.end()) {
          GroupLabel label = judge_labels({doc->text}, judge, task).front();
          it = verdict_cache.emplace(doc->text, label).first;
        }
        if (it->second == GroupLabel{1, 0}) {
          entry.positives.push_back(doc->embedding);
        } else if (it->second == GroupLabel{0, 1}) {
          entry.negatives.push_back(doc->embedding);
        }
        // (0,0) and (1,1) candidates carry no exclusive signal; skip
      }
    }

    if (entry.positives.empty() || entry.negatives.empty()) {
      ++result.dropped_queries;
      continue;
    }
    result.pairs.entries.push_back(std::move(entry));
  }
  return result;
}

}  // namespace ragbias
