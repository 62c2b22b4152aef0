#include <benchmark/benchmark.h>

#include "ragbias/adapters.hpp"
#include "ragbias/bias.hpp"
#include "ragbias/retrieval.hpp"
#include "ragbias/rng.hpp"
#include "ragbias/simulation.hpp"

using namespace ragbias;

namespace {

World bench_world(int n_queries) {
  WorldConfig cfg;
  cfg.dimension = 64;
  cfg.n_queries = n_queries;
  cfg.cluster_spread = 0.25;
  cfg.seed = 1;
  return gen_world(cfg);
}

void BM_RetrieveTopK(benchmark::State& state) {
  World world = bench_world(int(state.range(0)));
  std::size_t qi = 0;
  for (auto _ : state) {
    const Query& q = world.queries[qi++ % world.queries.size()];
    benchmark::DoNotOptimize(retrieve_topk(q.embedding, world.corpus, 5, q.id));
  }
}
BENCHMARK(BM_RetrieveTopK)->Arg(100)->Arg(500);

void BM_EmbedderBias(benchmark::State& state) {
  World world = bench_world(int(state.range(0)));
  EmbedderModel member;
  member.projection = ProjectionSpec{world.bias_direction, 0.5};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        embedder_bias(member, world.queries, world.corpus));
  }
}
BENCHMARK(BM_EmbedderBias)->Arg(100)->Arg(500);

void BM_ContrastiveGrad(benchmark::State& state) {
  World world = bench_world(100);
  PairSet pairs = gen_pairs(world, 3, 1.0);
  AdapterStack stack = AdapterStack::identity(64, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(contrastive_grad(stack, pairs, 0.05));
  }
}
BENCHMARK(BM_ContrastiveGrad);

void BM_TrainEpochs(benchmark::State& state) {
  World world = bench_world(100);
  PairSet pairs = gen_pairs(world, 3, 1.0);
  TrainConfig cfg;
  cfg.epochs = int(state.range(0));
  cfg.tau_loss = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_adapter(cfg, pairs));
  }
}
BENCHMARK(BM_TrainEpochs)->Arg(5)->Arg(15);

}  // namespace

BENCHMARK_MAIN();
