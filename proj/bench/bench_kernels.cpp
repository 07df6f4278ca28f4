// Serial vs OpenMP throughput of the batch kernels and of a full evaluation
// pass. Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <random>

#include "georft/kernels.hpp"
#include "georft/records.hpp"
#include "georft/scene.hpp"
#include "georft/trainer.hpp"

using namespace georft;

namespace {

std::vector<BBox> random_boxes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 200.0);
  std::vector<BBox> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng), y = u(rng);
    out.push_back({x, y, x + 1.0 + u(rng) / 4, y + 1.0 + u(rng) / 4});
  }
  return out;
}

Execution exec_of(const benchmark::State& state) {
  return state.range(0) ? Execution::kParallel : Execution::kSerial;
}

void BM_PairwiseBoxIou(benchmark::State& state) {
  const auto a = random_boxes(400, 1), b = random_boxes(400, 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::pairwise_box_iou(a, b, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * 400 * 400);
}
BENCHMARK(BM_PairwiseBoxIou)->Arg(0)->Arg(1);

void BM_BatchMaskIou(benchmark::State& state) {
  const auto a = random_boxes(512, 3), b = random_boxes(512, 4);
  std::vector<BinaryMask> ma, mb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma.push_back(rasterize_box(a[i], 256, 256));
    mb.push_back(rasterize_box(b[i], 256, 256));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::batch_mask_iou(ma, mb, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_BatchMaskIou)->Arg(0)->Arg(1);

void BM_LinearScores(benchmark::State& state) {
  const std::size_t dim = 35, n = 4096;
  std::vector<double> features(n * dim), params(dim);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (auto& f : features) f = g(rng);
  for (auto& p : params) p = g(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        kernels::linear_scores(features, params, 1.0, exec_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_LinearScores)->Arg(0)->Arg(1);

void BM_ForEachRewardScoring(benchmark::State& state) {
  GenDataOptions opts;
  opts.counts.gres = 52;
  static const auto contexts = contexts_from_records(generate_records(opts));
  static const ToySegmenter segmenter;
  std::vector<double> out(contexts.size());
  for (auto _ : state) {
    for_each_index(
        contexts.size(),
        [&](std::size_t i) {
          const auto& c = contexts[i];
          out[i] = score_completion(render_completion(c, c.size() - 1),
                                    c.example.gt, &c.scene, &segmenter)
                       .total;
        },
        exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * contexts.size());
}
BENCHMARK(BM_ForEachRewardScoring)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
