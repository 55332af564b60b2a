// Copyright 2026 The leuda Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Microbenchmarks for the per-iteration hot paths: losses, metrics, network
// forward passes, EMA updates and batch assembly.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <torch/torch.h>

#include "leuda/dataset.hpp"
#include "leuda/ensembling.hpp"
#include "leuda/losses.hpp"
#include "leuda/metrics.hpp"
#include "leuda/networks.hpp"

namespace leuda {
namespace {

torch::Tensor random_probs(std::int64_t batch, std::int64_t side) {
  return torch::softmax(torch::randn({batch, kDefaultNumClasses, side, side}), 1);
}

void BM_SelfInformation(benchmark::State& state) {
  const auto p = random_probs(8, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(self_information(p));
}
BENCHMARK(BM_SelfInformation)->Arg(64)->Arg(256);

void BM_InterConsistency(benchmark::State& state) {
  const auto a = random_probs(8, state.range(0));
  const auto b = random_probs(8, state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(inter_consistency(a, b));
}
BENCHMARK(BM_InterConsistency)->Arg(64)->Arg(256);

void BM_SegmentationLoss(benchmark::State& state) {
  LevelOutput output;
  output.logits = torch::randn({8, kDefaultNumClasses, 64, 64});
  output.probs = torch::softmax(output.logits, 1);
  const auto labels = torch::randint(0, kDefaultNumClasses, {8, 64, 64}, torch::kLong);
  for (auto _ : state) benchmark::DoNotOptimize(segmentation_loss(output, labels));
}
BENCHMARK(BM_SegmentationLoss);

LabelVolume random_labels(std::mt19937_64& rng, int d, int side) {
  LabelVolume v(d, side, side);
  std::uniform_int_distribution<int> pick(0, kDefaultNumClasses - 1);
  for (auto& x : v.voxels) x = static_cast<std::uint8_t>(pick(rng));
  return v;
}

void BM_EvaluateVolume(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const int side = static_cast<int>(state.range(0));
  const auto pred = random_labels(rng, 8, side);
  const auto gt = random_labels(rng, 8, side);
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate_volume("bench", pred, gt, {2.0, 1.0, 1.0}));
  }
}
BENCHMARK(BM_EvaluateVolume)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_SegmenterForward(benchmark::State& state) {
  SegmenterConfig config;
  config.base_width = static_cast<int>(state.range(0));
  auto segmenter = build_segmenter(config);
  const auto x = torch::randn({4, 1, 64, 64});
  torch::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(forward_multi_level(segmenter, x));
}
BENCHMARK(BM_SegmenterForward)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_DiscriminatorForward(benchmark::State& state) {
  DiscriminatorConfig config;
  config.base_width = static_cast<int>(state.range(0));
  auto d = build_discriminator(config);
  const auto x = random_probs(4, 64);
  torch::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(d->forward(x));
}
BENCHMARK(BM_DiscriminatorForward)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EmaUpdate(benchmark::State& state) {
  SegmenterConfig config;
  config.base_width = static_cast<int>(state.range(0));
  auto student = build_segmenter(config);
  auto teacher = make_teacher(student);
  for (auto _ : state) ema_update(teacher, student, 0.99);
}
BENCHMARK(BM_EmaUpdate)->Arg(8)->Arg(16);

void BM_AssembleBatch(benchmark::State& state) {
  TrainingPools pools;
  for (int i = 0; i < 200; ++i) {
    const std::string id = "s" + std::to_string(i) + "/0";
    pools.labeled.push_back({{Grid2D<float>(64, 64), ImageKind::kS, id},
                             {Grid2D<std::uint8_t>(64, 64)}});
    for (PairKind kind : kAllPairKinds) {
      const auto [a, b] = member_kinds(kind);
      pools.pairs.push_back(
          {{Grid2D<float>(64, 64), a, id}, {Grid2D<float>(64, 64), b, id}, kind});
    }
  }
  TrainingConfig config;
  std::uint64_t step = 0;
  for (auto _ : state) benchmark::DoNotOptimize(assemble_batch(pools, config, step++));
}
BENCHMARK(BM_AssembleBatch);

}  // namespace
}  // namespace leuda

int main(int argc, char** argv) {
  torch::set_num_threads(1);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
