#include <benchmark/benchmark.h>

#include "hopgat/attention.hpp"
#include "hopgat/graph.hpp"
#include "hopgat/metrics.hpp"
#include "hopgat/rng.hpp"
#include "hopgat/supervision.hpp"

using namespace hopgat;

namespace {

Graph sbm(std::size_t per_block) {
  SbmOptions o;
  o.nodes_per_block = per_block;
  o.p_in = 8.0 / static_cast<double>(per_block);
  o.p_out = 0.2 / static_cast<double>(per_block);
  return generate_sbm(o);
}

}  // namespace

static void BM_HopMatrix(benchmark::State& state) {
  const Graph g = sbm(static_cast<std::size_t>(state.range(0)) / 2);
  for (auto _ : state) benchmark::DoNotOptimize(compute_hop_matrix(g, 2));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HopMatrix)->RangeMultiplier(2)->Range(256, 4096)->Complexity();

static void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a({n, 64}), b({64, 64});
  for (double& v : a.data()) v = rng.uniform(-1, 1);
  for (double& v : b.data()) v = rng.uniform(-1, 1);
  for (auto _ : state) {
    Tape t;
    benchmark::DoNotOptimize(matmul(t.constant(a), t.constant(b)).value().data().data());
  }
}
BENCHMARK(BM_Matmul)->Arg(512)->Arg(2048);

// One training step of the desk preset: forward, both losses, backward.
static void BM_TrainStep(benchmark::State& state) {
  const Graph g = sbm(static_cast<std::size_t>(state.range(0)) / 2);
  const ModelConfig mc = ModelConfig::stack(g.feature_dim(), {8, 1}, {8, 2}, AttentionKind::addition, 0.2, 0, 0.2, 2);
  Model model(mc, 1);
  const GraphContext ctx = GraphContext::build(g, mc);
  const PairSampler sampler(ctx.hops, 0.01);
  Rng rng(2);
  std::uint64_t step = 0;
  for (auto _ : state) {
    Tape t;
    const ModelOutput out = model.forward(t, ctx, true, rng);
    const Var cls = classification_loss(out.scores, g, g.train);
    const auto fields = collect_fields(out);
    const Var att = attention_loss(fields, sampler.sample(step++), 2);
    t.backward(scale(cls, 0.5) + scale(att, 0.5));
    for (Parameter* p : model.parameters()) p->zero_grad();
  }
}
BENCHMARK(BM_TrainStep)->Arg(300)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
