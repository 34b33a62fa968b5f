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
#ifndef ECAVG_NN_H_
#define ECAVG_NN_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecavg/dataset.h"
#include "ecavg/rng.h"
#include "ecavg/tensor.h"

namespace ecavg {

struct ArchDescriptor {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims;
  std::size_t num_classes = 0;

  // input_dim, hidden dims..., num_classes.
  std::vector<std::size_t> LayerDims() const;
  void Validate() const;
  std::string ToString() const;

  friend bool operator==(const ArchDescriptor&, const ArchDescriptor&) =
      default;
};

enum class Activation : std::uint8_t { kRelu };

struct LayerParams {
  Tensor weights;  // [in_dim, out_dim]
  Tensor biases;   // [out_dim]

  std::size_t in_dim() const { return weights.dim(0); }
  std::size_t out_dim() const { return weights.dim(1); }

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Fully connected network: ReLU on every hidden layer, softmax output.
/// The last layer is the head; every layer before it is the backbone.
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(ArchDescriptor arch, std::vector<LayerParams> layers);

  const ArchDescriptor& arch() const noexcept { return arch_; }
  Activation activation() const noexcept { return Activation::kRelu; }
  const std::vector<LayerParams>& layers() const noexcept { return layers_; }
  const LayerParams& layer(std::size_t k) const { return layers_.at(k); }
  const LayerParams& head() const { return layers_.back(); }
  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t num_parameters() const;

  std::span<float> mutable_weights(std::size_t k) {
    return layers_.at(k).weights.data();
  }
  std::span<float> mutable_biases(std::size_t k) {
    return layers_.at(k).biases.data();
  }

  friend bool operator==(const MlpModel&, const MlpModel&) = default;

 private:
  ArchDescriptor arch_;
  std::vector<LayerParams> layers_;
};

// Checks every structural invariant of a layer stack against arch.
void ValidateLayers(const ArchDescriptor& arch,
                    const std::vector<LayerParams>& layers);

struct GradientSet {
  std::vector<LayerParams> layers;

  bool CongruentWith(const MlpModel& model) const;
  double SquaredNorm() const;
};

struct SgdConfig {
  double learning_rate = 0.05;
  std::size_t batch_size = 32;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;

  void Validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochStats> history;
};

struct BackwardResult {
  double loss = 0.0;
  GradientSet grads;
};

// Glorot-uniform weights in +-sqrt(6 / (in + out)) and zero biases.
LayerParams GlorotLayer(std::size_t in_dim, std::size_t out_dim,
                        Xoshiro256& rng);

MlpModel InitModel(const ArchDescriptor& arch, std::uint64_t seed);

// Row-wise class probabilities, shape [B, num_classes].
Tensor Forward(const MlpModel& model, const Tensor& batch);

// Mean over rows of -ln(max(p[label], 1e-12)).
double Loss(const Tensor& probs, std::span<const std::uint32_t> labels);

BackwardResult Backward(const MlpModel& model, const Tensor& batch,
                        std::span<const std::uint32_t> labels);

// p <- p - lr * g for every parameter, evaluated in float32.
MlpModel SgdStep(const MlpModel& model, const GradientSet& grads, double lr);
void ApplySgd(MlpModel& model, const GradientSet& grads, double lr);

// Minibatch SGD. Epoch e visits samples in an order shuffled by
// Xoshiro256(DeriveSeed({cfg.seed, e})); the last batch may be short.
TrainResult Train(MlpModel model, const DatasetShard& shard,
                  const SgdConfig& cfg);

// Index of the largest entry; ties go to the lowest index.
std::size_t Argmax(std::span<const float> row);

}  // namespace ecavg

#endif  // ECAVG_NN_H_
