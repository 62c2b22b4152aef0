#pragma once

#include <optional>
#include <string>

#include "ragbias/adapters.hpp"
#include "ragbias/retrieval.hpp"
#include "ragbias/types.hpp"

namespace ragbias {

// A frozen base embedding source composed with an optional trainable
// adapter stack and/or projection transform. Transforms apply to query
// embeddings only; document embeddings stay at the frozen base.
struct EmbedderModel {
  std::string id = "base";
  std::optional<AdapterStack> adapter;
  std::optional<ProjectionSpec> projection;

  Vec embed_query(const Vec& base_emb) const {
    Vec v = base_emb;
    if (adapter) v = adapter->forward(v);
    if (projection) v = project_query(v, *projection);
    return v;
  }
};

}  // namespace ragbias
