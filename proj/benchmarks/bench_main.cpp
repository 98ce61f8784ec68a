#include <benchmark/benchmark.h>

#include "chartgraph/graph_module.hpp"
#include "chartgraph/synthetic.hpp"
#include "chartgraph/training.hpp"

using namespace chartgraph;

namespace {

std::vector<ChartObject> scattered_objects(std::size_t n) {
  Rng rng(7);
  std::vector<ChartObject> objs;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(0, 0.8), y = rng.uniform(0, 0.8);
    objs.push_back({static_cast<ObjectId>(i), ObjectClass::Bar, {x, y, x + rng.uniform(0, 0.2), y + rng.uniform(0, 0.2)},
                    rng.uniform(), std::nullopt});
  }
  return objs;
}

Matrix filled(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-1, 1);
  return m;
}

ChartSample sample() {
  Rng rng(11);
  return generate_synthetic_chart(rng, {ChartType::Line, 3});
}

}  // namespace

static void BM_VisualGraph(benchmark::State& state) {
  const auto objs = scattered_objects(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_visual_graph(objs));
}
BENCHMARK(BM_VisualGraph)->Arg(8)->Arg(36)->Arg(128);

static void BM_TextualGraph(benchmark::State& state) {
  const auto s = sample();
  for (auto _ : state) benchmark::DoNotOptimize(build_textual_graph(s.annotation.objects, TextualEdgeMode::Rules));
}
BENCHMARK(BM_TextualGraph);

static void BM_NormalizedAdjacency(benchmark::State& state) {
  const auto g = build_visual_graph(scattered_objects(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(normalized_adjacency(g));
}
BENCHMARK(BM_NormalizedAdjacency)->Arg(36)->Arg(128);

static void BM_GcnForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix adj = normalized_adjacency(build_visual_graph(scattered_objects(n)));
  const Matrix x = filled(n, 32, 1);
  Rng rng(2);
  const auto p = GcnParams::glorot(32, 32, 32, rng);
  const Matrix dh = filled(n, 32, 3);
  for (auto _ : state) {
    const auto fwd = gcn_forward(adj, x, p, RunMode::Train, &rng);
    benchmark::DoNotOptimize(gcn_backward(fwd.tape, dh));
  }
}
BENCHMARK(BM_GcnForwardBackward)->Arg(8)->Arg(36);

static void BM_ComputeBias(benchmark::State& state) {
  const auto objs = scattered_objects(36);
  const PatchGrid grid(16, 16);
  const auto align = build_patch_alignment(objs, grid);
  std::vector<ObjectId> ids;
  for (const auto& o : objs) ids.push_back(o.id);
  const Matrix hg = filled(objs.size(), 32, 4);
  for (auto _ : state) benchmark::DoNotOptimize(compute_bias(hg, ids, align));
}
BENCHMARK(BM_ComputeBias);

static void BM_GraphModuleForward(benchmark::State& state) {
  const auto s = sample();
  GraphModuleConfig config;
  const auto plan = plan_graph_module(s.annotation, config, HashedEmbedder{64});
  Rng rng(5);
  const auto params = GraphModuleParams::init(32, 64, rng);
  const Matrix states = PseudoEncoder(6, 32).encode_patches(s.annotation, config.grid);
  for (auto _ : state) benchmark::DoNotOptimize(graph_module_forward(plan, states, params, RunMode::Eval));
}
BENCHMARK(BM_GraphModuleForward);

static void BM_TrainingStep(benchmark::State& state) {
  TrainConfig config;
  const auto data = generate_dataset(config, 9, 8);
  const HashedEmbedder embedder{config.embed_dim};
  std::vector<GraphPlan> plans;
  for (const auto& s : data) plans.push_back(plan_graph_module(s.annotation, config.module, embedder));
  Model model = init_model(config);
  Rng rng(10);
  for (auto _ : state) {
    for (std::size_t i = 0; i < data.size(); ++i)
      benchmark::DoNotOptimize(sample_loss_and_grads(plans[i], data[i], model, RunMode::Train, &rng));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.size()));
}
BENCHMARK(BM_TrainingStep);
BENCHMARK_MAIN();
