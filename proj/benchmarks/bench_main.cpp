#include <benchmark/benchmark.h>

#include <random>

#include "ttk/layers.hpp"
#include "ttk/model.hpp"
#include "ttk/tensor.hpp"
#include "ttk/ttcore.hpp"
#include "ttk/ttlayer.hpp"
#include "ttk/tucker.hpp"

using namespace ttk;

namespace {

DenseTensor noise(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  DenseTensor t(std::move(shape));
  for (double& v : t.data()) v = d(rng);
  return t;
}

// Largest hidden layer: 256 -> 512, (4,4,4,4) -> (8,4,4,4).
void BM_TTForward(benchmark::State& state) {
  const Index rank = state.range(0);
  const TTLinearLayer layer =
      tt_layer_random(Shape{4, 4, 4, 4}, Shape{8, 4, 4, 4}, RankVector::uniform(4, rank), 1);
  const DenseTensor x = noise(Shape{256, 256}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(tt_forward(layer, x));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_TTForward)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void BM_DenseForward(benchmark::State& state) {
  Dense layer(256, 512, 1);
  const DenseTensor x = noise(Shape{256, 256}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(layer.forward(x, Mode::eval));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_DenseForward);

void BM_TuckerForward(benchmark::State& state) {
  const Index r = state.range(0);
  TuckerLinearLayer layer{tucker_random(Shape{16, 16}, Shape{32, 16}, {r, r, r, r}, 1), std::vector<double>(512)};
  const DenseTensor x = noise(Shape{256, 256}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(tucker_layer_forward(layer, x));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_TuckerForward)->Arg(7)->Arg(16);

void BM_DenseToTTM(benchmark::State& state) {
  const DenseTensor w = noise(Shape{512, 256}, 3);
  const Matrix m = as_matrix(w, 512, 256);
  for (auto _ : state)
    benchmark::DoNotOptimize(dense_to_ttm(m, Shape{4, 4, 4, 4}, Shape{8, 4, 4, 4}, RankVector::uniform(4, 8)));
}
BENCHMARK(BM_DenseToTTM)->Unit(benchmark::kMillisecond);

void BM_Conv1dFirstLayer(benchmark::State& state) {
  Conv1d conv(1, 32, 80, 16, 1);
  const DenseTensor x = noise(Shape{Index(state.range(0)), 1, 8000}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x, Mode::eval));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Conv1dFirstLayer)->Arg(1)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ModelForwardBackward(benchmark::State& state) {
  Model model = build_model(ModelConfig::for_head(static_cast<HeadKind>(state.range(0)), 0));
  const DenseTensor x = noise(Shape{32, 1, 8000}, 5);
  std::vector<Index> labels(32);
  for (Index i = 0; i < 32; ++i) labels[i] = i % 35;
  for (auto _ : state) {
    model.zero_grad();
    model.backward(softmax_cross_entropy(model.forward(x, Mode::train), labels).grad);
  }
  state.SetLabel(to_string(model.config().head_kind));
}
BENCHMARK(BM_ModelForwardBackward)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
