#include <benchmark/benchmark.h>

#include <random>

#include "arg/model.hpp"
#include "arg/synth.hpp"
#include "arg/temporal.hpp"

namespace {

arg::ModelConfig bench_config(std::size_t graphs, std::size_t key_dim) {
  arg::ModelConfig c;
  c.relation.graph_count = graphs;
  c.relation.key_dim = key_dim;
  c.feature_dim = 16;
  c.action_classes = 3;
  c.activity_classes = 4;
  return c;
}

arg::ActorSet bench_actors(std::size_t frames) {
  arg::SynthConfig sc;
  sc.min_actors = sc.max_actors = 10;
  const arg::SceneSample s = arg::generate_video(sc, 3);
  const auto ids = arg::sample_frames(s.frames.size(), frames, arg::SampleMode::Center, std::uint64_t{0});
  return arg::assemble_temporal_actorset(s.frames, ids);
}

void BM_GraphGroup(benchmark::State& state) {
  const auto config = bench_config(static_cast<std::size_t>(state.range(0)), 32);
  const arg::Model m = arg::init_model(config, 1);
  const arg::ActorSet actors = bench_actors(3);
  for (auto _ : state) {
    auto g = arg::build_graph_group(actors, config.relation, m.params.relations);
    benchmark::DoNotOptimize(g.graphs.data());
  }
}
BENCHMARK(BM_GraphGroup)->Arg(1)->Arg(4)->Arg(16);

void BM_Forward(benchmark::State& state) {
  const arg::Model m = arg::init_model(bench_config(4, static_cast<std::size_t>(state.range(0))), 1);
  const arg::ActorSet actors = bench_actors(3);
  for (auto _ : state) {
    auto p = arg::forward(m, actors);
    benchmark::DoNotOptimize(p.group_logits.data().data());
  }
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(256);

void BM_ForwardBackward(benchmark::State& state) {
  const arg::Model m = arg::init_model(bench_config(static_cast<std::size_t>(state.range(0)), 32), 1);
  const arg::ActorSet actors = bench_actors(3);
  std::vector<std::size_t> labels(actors.size(), 0);
  for (auto _ : state) {
    auto g = arg::loss_and_gradient(m, actors, 1, labels, 1.0);
    benchmark::DoNotOptimize(g.loss);
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(4)->Arg(16);

void BM_Base(benchmark::State& state) {
  const arg::Model m = arg::init_model(bench_config(4, 32), 1);
  const arg::ActorSet actors = bench_actors(3);
  for (auto _ : state) {
    auto p = arg::predict_base(m, actors);
    benchmark::DoNotOptimize(p.group_logits.data().data());
  }
}
BENCHMARK(BM_Base);

}  // namespace

BENCHMARK_MAIN();
