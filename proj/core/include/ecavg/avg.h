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
#ifndef ECAVG_AVG_H_
#define ECAVG_AVG_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ecavg/dataset.h"
#include "ecavg/nn.h"

namespace ecavg {

enum class AveragingMode { kUnweighted, kSampleWeighted };
enum class HeadMode { kPlacement, kFresh };
enum class UpdateMode { kFull, kBackboneOnly };

/// Shared backbone plus the label maps of every client, in client order.
struct GlobalArchPlan {
  std::size_t num_global_classes = 0;
  std::vector<LabelMap> client_maps;
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;

  ArchDescriptor GlobalArch() const;
  ArchDescriptor ClientArch(std::size_t client) const;
  std::size_t feature_dim() const;
  void Validate() const;
};

// num_global_classes defaults to the number of distinct global ids, which
// must then be exactly 0..K-1. An explicit K may exceed it; the missing
// classes get freshly initialized head columns.
GlobalArchPlan MakePlan(std::vector<LabelMap> client_maps,
                        std::size_t input_dim,
                        std::vector<std::size_t> hidden_dims,
                        std::optional<std::size_t> num_global_classes = {});

/// Elementwise mean of every backbone layer, summed in client order in
/// float64. With sample_counts the mean is weighted by n_i / N.
std::vector<LayerParams> AverageBackbone(
    std::span<const MlpModel> models,
    std::span<const std::uint64_t> sample_counts = {});

/// K-column head. Column c is copied from the client that owns c (through its
/// label map), averaged if several clients own it, and Glorot-initialized
/// from seed if nobody does. Biases follow the same rule, zero when unowned.
LayerParams BuildGlobalHead(std::span<const MlpModel> models,
                            const GlobalArchPlan& plan, std::uint64_t seed);

struct AssembleOptions {
  AveragingMode averaging = AveragingMode::kUnweighted;
  HeadMode head = HeadMode::kPlacement;
  std::vector<std::uint64_t> sample_counts;  // used by kSampleWeighted
};

MlpModel AssembleGlobal(std::span<const MlpModel> models,
                        const GlobalArchPlan& plan, std::uint64_t seed,
                        const AssembleOptions& options = {});

// Backbone from global; head column j is global column map[j].
MlpModel SliceForClient(const MlpModel& global, const LabelMap& map);

// kBackboneOnly keeps previous.head() and takes only the backbone from global.
MlpModel SliceForClient(const MlpModel& global, const LabelMap& map,
                        UpdateMode mode, const MlpModel& previous);

}  // namespace ecavg

#endif  // ECAVG_AVG_H_
