#include <benchmark/benchmark.h>

#include "hiconform/classifier.hpp"
#include "hiconform/graph_crc.hpp"
#include "hiconform/synthgen.hpp"
#include "test_support.hpp"

namespace {

using namespace hiconform;

struct Fixture {
  LabelGraph graph;
  std::vector<std::string> classes;
  LabeledBatch batch;
};

Fixture make_fixture(std::size_t rows) {
  SynthConfig cfg;
  cfg.tree = TreeShape{3, 4};
  const SynthGenerator gen(cfg);
  Rng rng(1);
  std::vector<double> v;
  std::vector<std::size_t> y;
  const std::size_t k = gen.class_names().size();
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row = testing::random_row(rng, k, 3.0);
    v.insert(v.end(), row.begin(), row.end());
    y.push_back(i % k);
  }
  return {gen.graph(), gen.class_names(),
          LabeledBatch::from_indices(ProbMatrix(gen.class_names(), std::move(v)), std::move(y))};
}

void BM_GraphSet(benchmark::State& state) {
  const auto f = make_fixture(1024);
  const GraphBinding b(f.graph, f.classes);
  std::size_t i = 0;
  for (auto _ : state) {
    auto s = graph_set_nodes(b, f.batch.probs.row(i++ % 1024), 0.7);
    benchmark::DoNotOptimize(s);
  }
}
BENCHMARK(BM_GraphSet);

void BM_CalibrateLambda(benchmark::State& state) {
  const auto f = make_fixture(static_cast<std::size_t>(state.range(0)));
  const GraphBinding b(f.graph, f.classes);
  for (auto _ : state) {
    auto c = calibrate_lambda(b, f.batch, 0.1);
    benchmark::DoNotOptimize(c.lambda_hat);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CalibrateLambda)->Arg(1000)->Arg(10000);

void BM_FitLogit(benchmark::State& state) {
  SynthConfig cfg;
  cfg.tree = TreeShape{};
  cfg.n_features = static_cast<std::size_t>(state.range(0));
  const auto data = generate(cfg, 2000);
  for (auto _ : state) {
    auto m = fit_logit(data.features, data.labels);
    benchmark::DoNotOptimize(m.weights.data());
  }
}
BENCHMARK(BM_FitLogit)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
