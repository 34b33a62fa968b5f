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
#include <vector>

#include <benchmark/benchmark.h>

#include "ecavg/avg.h"
#include "ecavg/dataset.h"
#include "ecavg/metrics.h"
#include "ecavg/nn.h"

namespace ecavg {
namespace {

const GlobalArchPlan& MnistPlan() {
  static const GlobalArchPlan plan =
      MakePlan({LabelMap({0, 1, 2, 3, 4}), LabelMap({5, 6, 7, 8, 9})}, 784, {128});
  return plan;
}

std::vector<MlpModel> Clients() {
  return {InitModel(MnistPlan().ClientArch(0), 1), InitModel(MnistPlan().ClientArch(1), 2)};
}

void BM_AverageBackbone(benchmark::State& state) {
  const auto models = Clients();
  for (auto _ : state) benchmark::DoNotOptimize(AverageBackbone(models));
}
BENCHMARK(BM_AverageBackbone);

void BM_AssembleAndSlice(benchmark::State& state) {
  const auto models = Clients();
  for (auto _ : state) {
    const MlpModel global = AssembleGlobal(models, MnistPlan(), 7);
    benchmark::DoNotOptimize(SliceForClient(global, MnistPlan().client_maps[1]));
  }
}
BENCHMARK(BM_AssembleAndSlice);

void BM_Evaluate(benchmark::State& state) {
  const DatasetShard test = SynthBlobs(10, 100, 784, 5);
  const MlpModel m = InitModel({784, {128}, 10}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(Evaluate(m, test));
  state.SetItemsProcessed(state.iterations() * test.size());
}
BENCHMARK(BM_Evaluate);

}  // namespace
}  // namespace ecavg
