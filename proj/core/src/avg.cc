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
#include "ecavg/avg.h"

#include <cmath>
#include <set>

#include "ecavg/error.h"
#include "ecavg/rng.h"

namespace ecavg {
namespace {

void CheckBackbones(std::span<const MlpModel> models) {
  if (models.empty()) Fail(ErrorCode::kArity, "no models to average");
  const MlpModel& first = models.front();
  for (std::size_t i = 1; i < models.size(); ++i) {
    const MlpModel& m = models[i];
    bool same = m.arch().input_dim == first.arch().input_dim &&
                m.arch().hidden_dims == first.arch().hidden_dims;
    if (!same) {
      Fail(ErrorCode::kIncompatibleModels,
           "model " + std::to_string(i) + " " + m.arch().ToString() +
               " has a different backbone from " + first.arch().ToString());
    }
  }
}

}  // namespace

ArchDescriptor GlobalArchPlan::GlobalArch() const {
  return ArchDescriptor{input_dim, hidden_dims, num_global_classes};
}

ArchDescriptor GlobalArchPlan::ClientArch(std::size_t client) const {
  return ArchDescriptor{input_dim, hidden_dims,
                        client_maps.at(client).num_local_classes()};
}

std::size_t GlobalArchPlan::feature_dim() const {
  return hidden_dims.empty() ? input_dim : hidden_dims.back();
}

void GlobalArchPlan::Validate() const {
  GlobalArch().Validate();
  if (client_maps.empty()) Fail(ErrorCode::kArity, "plan has no clients");
  for (std::size_t i = 0; i < client_maps.size(); ++i) {
    if (client_maps[i].num_local_classes() == 0) {
      Fail(ErrorCode::kSurgery,
           "client " + std::to_string(i) + " owns no classes");
    }
    for (std::uint32_t g : client_maps[i].local_to_global()) {
      if (g >= num_global_classes) {
        Fail(ErrorCode::kSurgery,
             "client " + std::to_string(i) + " maps to class " +
                 std::to_string(g) + " outside " +
                 std::to_string(num_global_classes) + " global classes");
      }
    }
  }
}

GlobalArchPlan MakePlan(std::vector<LabelMap> client_maps,
                        std::size_t input_dim,
                        std::vector<std::size_t> hidden_dims,
                        std::optional<std::size_t> num_global_classes) {
  std::set<std::uint32_t> distinct;
  for (const LabelMap& m : client_maps) {
    distinct.insert(m.local_to_global().begin(), m.local_to_global().end());
  }
  GlobalArchPlan plan;
  plan.client_maps = std::move(client_maps);
  plan.input_dim = input_dim;
  plan.hidden_dims = std::move(hidden_dims);
  plan.num_global_classes = num_global_classes.value_or(distinct.size());
  plan.Validate();
  return plan;
}

std::vector<LayerParams> AverageBackbone(
    std::span<const MlpModel> models,
    std::span<const std::uint64_t> sample_counts) {
  CheckBackbones(models);
  const bool weighted = !sample_counts.empty();
  double total = static_cast<double>(models.size());
  if (weighted) {
    if (sample_counts.size() != models.size()) {
      Fail(ErrorCode::kArity, std::to_string(sample_counts.size()) +
                                  " sample counts for " +
                                  std::to_string(models.size()) + " models");
    }
    total = 0.0;
    for (std::uint64_t n : sample_counts) total += static_cast<double>(n);
    if (total <= 0.0) Fail(ErrorCode::kArity, "sample counts sum to zero");
  }

  const std::size_t backbone_layers = models.front().num_layers() - 1;
  std::vector<LayerParams> out;
  out.reserve(backbone_layers);
  std::vector<double> acc;
  auto average = [&](auto member) {
    const Tensor& proto = models.front().layers()[out.size()].*member;
    acc.assign(proto.size(), 0.0);
    for (std::size_t m = 0; m < models.size(); ++m) {
      const double w = weighted ? static_cast<double>(sample_counts[m]) : 1.0;
      auto src = (models[m].layers()[out.size()].*member).data();
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * src[i];
    }
    Tensor t(proto.shape());
    for (std::size_t i = 0; i < acc.size(); ++i) {
      t[i] = static_cast<float>(acc[i] / total);
    }
    return t;
  };
  for (std::size_t l = 0; l < backbone_layers; ++l) {
    Tensor w = average(&LayerParams::weights);
    Tensor b = average(&LayerParams::biases);
    out.push_back(LayerParams{std::move(w), std::move(b)});
  }
  return out;
}

LayerParams BuildGlobalHead(std::span<const MlpModel> models,
                            const GlobalArchPlan& plan, std::uint64_t seed) {
  plan.Validate();
  if (models.size() != plan.client_maps.size()) {
    Fail(ErrorCode::kSurgery, std::to_string(models.size()) +
                                  " models for a plan with " +
                                  std::to_string(plan.client_maps.size()) +
                                  " clients");
  }
  const std::size_t features = plan.feature_dim();
  const std::size_t k = plan.num_global_classes;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const LayerParams& head = models[i].head();
    if (head.in_dim() != features ||
        head.out_dim() != plan.client_maps[i].num_local_classes()) {
      Fail(ErrorCode::kSurgery,
           "client " + std::to_string(i) + " head " +
               head.weights.ShapeString() + " does not match its plan [" +
               std::to_string(features) + "," +
               std::to_string(plan.client_maps[i].num_local_classes()) + "]");
    }
  }

  LayerParams out{Tensor::Matrix(features, k), Tensor::Vector(k)};
  Xoshiro256 rng(seed);
  const double bound = std::sqrt(6.0 / static_cast<double>(features + k));
  std::vector<double> column(features);
  for (std::uint32_t c = 0; c < k; ++c) {
    std::size_t owners = 0;
    double bias = 0.0;
    column.assign(features, 0.0);
    for (std::size_t i = 0; i < models.size(); ++i) {
      const std::optional<std::uint32_t> local =
          plan.client_maps[i].local_of(c);
      if (!local) continue;
      const LayerParams& head = models[i].head();
      for (std::size_t r = 0; r < features; ++r) {
        column[r] += head.weights.at(r, *local);
      }
      bias += head.biases[*local];
      ++owners;
    }
    if (owners == 0) {
      for (std::size_t r = 0; r < features; ++r) {
        out.weights.at(r, c) =
            static_cast<float>((2.0 * rng.UniformFloat() - 1.0) * bound);
      }
      continue;
    }
    const double n = static_cast<double>(owners);
    for (std::size_t r = 0; r < features; ++r) {
      out.weights.at(r, c) = static_cast<float>(column[r] / n);
    }
    out.biases[c] = static_cast<float>(bias / n);
  }
  return out;
}

MlpModel AssembleGlobal(std::span<const MlpModel> models,
                        const GlobalArchPlan& plan, std::uint64_t seed,
                        const AssembleOptions& options) {
  plan.Validate();
  CheckBackbones(models);
  const ArchDescriptor& first = models.front().arch();
  if (first.input_dim != plan.input_dim ||
      first.hidden_dims != plan.hidden_dims) {
    Fail(ErrorCode::kSurgery, "client backbone " + first.ToString() +
                                  " differs from the plan " +
                                  plan.GlobalArch().ToString());
  }
  std::span<const std::uint64_t> counts;
  if (options.averaging == AveragingMode::kSampleWeighted) {
    counts = options.sample_counts;
    if (counts.empty()) {
      Fail(ErrorCode::kArity, "sample-weighted averaging needs sample counts");
    }
  }
  std::vector<LayerParams> layers = AverageBackbone(models, counts);
  if (options.head == HeadMode::kFresh) {
    Xoshiro256 rng(seed);
    layers.push_back(
        GlorotLayer(plan.feature_dim(), plan.num_global_classes, rng));
  } else {
    layers.push_back(BuildGlobalHead(models, plan, seed));
  }
  return MlpModel(plan.GlobalArch(), std::move(layers));
}

MlpModel SliceForClient(const MlpModel& global, const LabelMap& map) {
  const std::size_t k = global.arch().num_classes;
  for (std::uint32_t g : map.local_to_global()) {
    if (g >= k) {
      Fail(ErrorCode::kSurgery, "label map refers to class " +
                                    std::to_string(g) + " of a " +
                                    std::to_string(k) + "-class model");
    }
  }
  if (map.num_local_classes() == 0) {
    Fail(ErrorCode::kSurgery, "cannot slice an empty label map");
  }
  std::vector<LayerParams> layers(global.layers().begin(),
                                  global.layers().end() - 1);
  const LayerParams& head = global.head();
  const std::size_t features = head.in_dim();
  const std::size_t local = map.num_local_classes();
  LayerParams sliced{Tensor::Matrix(features, local), Tensor::Vector(local)};
  for (std::size_t j = 0; j < local; ++j) {
    const std::uint32_t g = map.global_of(j);
    for (std::size_t r = 0; r < features; ++r) {
      sliced.weights.at(r, j) = head.weights.at(r, g);
    }
    sliced.biases[j] = head.biases[g];
  }
  layers.push_back(std::move(sliced));
  ArchDescriptor arch = global.arch();
  arch.num_classes = local;
  return MlpModel(std::move(arch), std::move(layers));
}

MlpModel SliceForClient(const MlpModel& global, const LabelMap& map,
                        UpdateMode mode, const MlpModel& previous) {
  MlpModel full = SliceForClient(global, map);
  if (mode == UpdateMode::kFull) return full;
  if (previous.arch() != full.arch()) {
    Fail(ErrorCode::kSurgery, "previous client model " +
                                  previous.arch().ToString() +
                                  " does not match sliced " +
                                  full.arch().ToString());
  }
  std::vector<LayerParams> layers(full.layers().begin(),
                                  full.layers().end() - 1);
  layers.push_back(previous.head());
  return MlpModel(full.arch(), std::move(layers));
}

}  // namespace ecavg
