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

#include "ecavg/dataset.h"
#include "ecavg/nn.h"
#include "ecavg/proto/blob.h"
#include "ecavg/proto/message.h"
#include "ecavg/rng.h"

namespace ecavg::proto {
namespace {

void BM_EncodeModel(benchmark::State& state) {
  const MlpModel m = InitModel({784, {128}, 10}, 1);
  for (auto _ : state) benchmark::DoNotOptimize(EncodeModel(m));
}
BENCHMARK(BM_EncodeModel);

void BM_DecodeWeightsFrame(benchmark::State& state) {
  const MlpModel m = InitModel({784, {128}, 10}, 1);
  const std::vector<std::uint8_t> frame =
      EncodeMessage(MakeWeightsUpload({m, {30000, 10, 0.1, 0.97}}));
  for (auto _ : state) {
    const DecodeResult r = DecodeMessage(frame);
    benchmark::DoNotOptimize(ParseWeightsUpload(r.message));
  }
  state.SetBytesProcessed(state.iterations() * frame.size());
}
BENCHMARK(BM_DecodeWeightsFrame);

void BM_ShardRoundTrip(benchmark::State& state) {
  // u8-representable pixels, as for MNIST.
  const std::size_t n = state.range(0);
  Xoshiro256 rng(3);
  Tensor images({n, 784});
  for (float& v : images.data()) v = static_cast<float>(rng.Below(256)) / 255.0f;
  std::vector<std::uint32_t> labels(n);
  for (auto& l : labels) l = static_cast<std::uint32_t>(rng.Below(5));
  const DatasetShard shard(std::move(images), std::move(labels),
                           LabelMap({0, 1, 2, 3, 4}));
  for (auto _ : state) benchmark::DoNotOptimize(DecodeShard(EncodeShard(shard)));
  state.SetItemsProcessed(state.iterations() * shard.size());
}
BENCHMARK(BM_ShardRoundTrip)->Arg(1000);

}  // namespace
}  // namespace ecavg::proto
