// Copyright 2026 The ECAvg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include <cstdint>
#include <vector>

#include <benchmark/benchmark.h>

#include "ecavg/nn.h"
#include "ecavg/rng.h"
#include "ecavg/tensor.h"

namespace ecavg {
namespace {

// MNIST-shaped single hidden layer.
const ArchDescriptor kArch{784, {128}, 10};

struct Batch {
  Tensor x;
  std::vector<std::uint32_t> y;
};

Batch RandomBatch(std::size_t n) {
  Xoshiro256 rng(1);
  Batch b{Tensor({n, kArch.input_dim}), std::vector<std::uint32_t>(n)};
  for (float& v : b.x.data()) v = rng.UniformFloat();
  for (auto& l : b.y) l = static_cast<std::uint32_t>(rng.Below(kArch.num_classes));
  return b;
}

void BM_Forward(benchmark::State& state) {
  const MlpModel m = InitModel(kArch, 1);
  const Batch b = RandomBatch(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Forward(m, b.x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128);

void BM_Backward(benchmark::State& state) {
  const MlpModel m = InitModel(kArch, 1);
  const Batch b = RandomBatch(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Backward(m, b.x, b.y));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Backward)->Arg(32)->Arg(128);

void BM_SgdStep(benchmark::State& state) {
  MlpModel m = InitModel(kArch, 1);
  const Batch b = RandomBatch(32);
  const GradientSet g = Backward(m, b.x, b.y).grads;
  for (auto _ : state) {
    ApplySgd(m, g, 1e-6);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_SgdStep);

}  // namespace
}  // namespace ecavg

BENCHMARK_MAIN();
