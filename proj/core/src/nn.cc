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
#include "ecavg/nn.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ecavg/error.h"

namespace ecavg {
namespace {

constexpr double kProbabilityFloor = 1e-12;

// out[i, :] = bias + in[i, :] * weights. Zero inputs are skipped, which pays
// off on sparse MNIST pixels and on ReLU outputs.
void AffineForward(const Tensor& in, const LayerParams& layer, Tensor& out) {
  const std::size_t batch = in.rows();
  const std::size_t in_dim = layer.in_dim();
  const std::size_t out_dim = layer.out_dim();
  const float* w = layer.weights.data().data();
  const float* b = layer.biases.data().data();
  for (std::size_t i = 0; i < batch; ++i) {
    const float* x = in.data().data() + i * in_dim;
    float* z = out.data().data() + i * out_dim;
    std::copy(b, b + out_dim, z);
    for (std::size_t k = 0; k < in_dim; ++k) {
      const float xk = x[k];
      if (xk == 0.0f) continue;
      const float* wk = w + k * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) z[j] += xk * wk[j];
    }
  }
}

void ReluInPlace(Tensor& t) {
  for (float& v : t.data()) v = v > 0.0f ? v : 0.0f;
}

void SoftmaxRowsInPlace(Tensor& t) {
  const std::size_t cols = t.cols();
  std::vector<double> e(cols);
  for (std::size_t i = 0; i < t.rows(); ++i) {
    auto row = t.row(i);
    const float max = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      e[j] = std::exp(static_cast<double>(row[j] - max));
      sum += e[j];
    }
    for (std::size_t j = 0; j < cols; ++j) {
      row[j] = static_cast<float>(e[j] / sum);
    }
  }
}

void CheckBatch(const MlpModel& model, const Tensor& batch) {
  if (batch.rank() != 2 || batch.cols() != model.arch().input_dim) {
    Fail(ErrorCode::kShape, "batch shape " + batch.ShapeString() +
                                " does not match input_dim " +
                                std::to_string(model.arch().input_dim));
  }
}

void CheckLabels(std::span<const std::uint32_t> labels, std::size_t rows,
                 std::size_t num_classes) {
  if (labels.size() != rows) {
    Fail(ErrorCode::kShape, "got " + std::to_string(labels.size()) +
                                " labels for " + std::to_string(rows) +
                                " rows");
  }
  for (std::uint32_t y : labels) {
    if (y >= num_classes) {
      Fail(ErrorCode::kLabel, "label " + std::to_string(y) +
                                  " out of range for " +
                                  std::to_string(num_classes) + " classes");
    }
  }
}

// Post-activation outputs of every layer; acts[0] is the input batch and
// acts.back() holds the softmax probabilities.
std::vector<Tensor> ForwardAll(const MlpModel& model, const Tensor& batch) {
  std::vector<Tensor> acts;
  acts.reserve(model.num_layers() + 1);
  acts.push_back(batch);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const LayerParams& layer = model.layer(l);
    Tensor z = Tensor::Matrix(batch.rows(), layer.out_dim());
    AffineForward(acts.back(), layer, z);
    if (l + 1 < model.num_layers()) {
      ReluInPlace(z);
    } else {
      SoftmaxRowsInPlace(z);
    }
    acts.push_back(std::move(z));
  }
  return acts;
}

struct BackwardPass {
  double loss = 0.0;
  std::size_t correct = 0;
  GradientSet grads;
};

BackwardPass RunBackward(const MlpModel& model, const Tensor& batch,
                         std::span<const std::uint32_t> labels) {
  CheckBatch(model, batch);
  CheckLabels(labels, batch.rows(), model.arch().num_classes);
  const std::size_t rows = batch.rows();
  if (rows == 0) Fail(ErrorCode::kEmptyDataset, "backward on an empty batch");

  std::vector<Tensor> acts = ForwardAll(model, batch);
  const Tensor& probs = acts.back();

  BackwardPass pass;
  pass.loss = Loss(probs, labels);
  for (std::size_t i = 0; i < rows; ++i) {
    if (Argmax(probs.row(i)) == labels[i]) ++pass.correct;
  }

  // d(mean CE)/d(logits) = (p - onehot) / B.
  const float inv_rows = 1.0f / static_cast<float>(rows);
  Tensor delta = probs;
  for (std::size_t i = 0; i < rows; ++i) {
    auto d = delta.row(i);
    d[labels[i]] -= 1.0f;
    for (float& v : d) v *= inv_rows;
  }

  pass.grads.layers.resize(model.num_layers());
  for (std::size_t l = model.num_layers(); l-- > 0;) {
    const LayerParams& layer = model.layer(l);
    const Tensor& in = acts[l];
    const std::size_t in_dim = layer.in_dim();
    const std::size_t out_dim = layer.out_dim();

    LayerParams& g = pass.grads.layers[l];
    g.weights = Tensor::Matrix(in_dim, out_dim);
    g.biases = Tensor::Vector(out_dim);
    float* gw = g.weights.data().data();
    float* gb = g.biases.data().data();
    for (std::size_t i = 0; i < rows; ++i) {
      const float* x = in.data().data() + i * in_dim;
      const float* d = delta.data().data() + i * out_dim;
      for (std::size_t j = 0; j < out_dim; ++j) gb[j] += d[j];
      for (std::size_t k = 0; k < in_dim; ++k) {
        const float xk = x[k];
        if (xk == 0.0f) continue;
        float* gwk = gw + k * out_dim;
        for (std::size_t j = 0; j < out_dim; ++j) gwk[j] += xk * d[j];
      }
    }

    if (l == 0) break;
    // Propagate through the weights and the ReLU of the layer below; the
    // ReLU derivative is read off the stored output (positive iff active).
    Tensor prev = Tensor::Matrix(rows, in_dim);
    const float* w = layer.weights.data().data();
    for (std::size_t i = 0; i < rows; ++i) {
      const float* x = in.data().data() + i * in_dim;
      const float* d = delta.data().data() + i * out_dim;
      float* p = prev.data().data() + i * in_dim;
      for (std::size_t k = 0; k < in_dim; ++k) {
        if (x[k] <= 0.0f) continue;
        const float* wk = w + k * out_dim;
        float acc = 0.0f;
        for (std::size_t j = 0; j < out_dim; ++j) acc += d[j] * wk[j];
        p[k] = acc;
      }
    }
    delta = std::move(prev);
  }

  for (const LayerParams& g : pass.grads.layers) {
    RequireFinite(g.weights, "gradient");
    RequireFinite(g.biases, "gradient");
  }
  return pass;
}

Tensor GatherRows(const Tensor& src, std::span<const std::size_t> indices) {
  const std::size_t cols = src.cols();
  Tensor out = Tensor::Matrix(indices.size(), cols);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    auto from = src.row(indices[i]);
    std::copy(from.begin(), from.end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

std::vector<std::size_t> ArchDescriptor::LayerDims() const {
  std::vector<std::size_t> dims;
  dims.reserve(hidden_dims.size() + 2);
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(num_classes);
  return dims;
}

void ArchDescriptor::Validate() const {
  for (std::size_t d : LayerDims()) {
    if (d == 0) {
      Fail(ErrorCode::kInvalidArchitecture,
           "architecture " + ToString() + " has a zero dimension");
    }
  }
}

std::string ArchDescriptor::ToString() const {
  std::string out = "(" + std::to_string(input_dim) + ",[";
  for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(hidden_dims[i]);
  }
  return out + "]," + std::to_string(num_classes) + ")";
}

void ValidateLayers(const ArchDescriptor& arch,
                    const std::vector<LayerParams>& layers) {
  arch.Validate();
  const std::vector<std::size_t> dims = arch.LayerDims();
  if (layers.size() + 1 != dims.size()) {
    Fail(ErrorCode::kInvalidArchitecture,
         "architecture " + arch.ToString() + " needs " +
             std::to_string(dims.size() - 1) + " layers, got " +
             std::to_string(layers.size()));
  }
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const LayerParams& layer = layers[k];
    if (layer.weights.rank() != 2 || layer.biases.rank() != 1 ||
        layer.weights.dim(0) != dims[k] ||
        layer.weights.dim(1) != dims[k + 1] ||
        layer.biases.dim(0) != dims[k + 1]) {
      Fail(ErrorCode::kInvalidArchitecture,
           "layer " + std::to_string(k) + " has weights " +
               layer.weights.ShapeString() + " and biases " +
               layer.biases.ShapeString() + ", incompatible with " +
               arch.ToString());
    }
  }
}

MlpModel::MlpModel(ArchDescriptor arch, std::vector<LayerParams> layers)
    : arch_(std::move(arch)), layers_(std::move(layers)) {
  ValidateLayers(arch_, layers_);
}

std::size_t MlpModel::num_parameters() const {
  std::size_t n = 0;
  for (const LayerParams& l : layers_) n += l.weights.size() + l.biases.size();
  return n;
}

bool GradientSet::CongruentWith(const MlpModel& model) const {
  if (layers.size() != model.num_layers()) return false;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (layers[k].weights.shape() != model.layer(k).weights.shape() ||
        layers[k].biases.shape() != model.layer(k).biases.shape()) {
      return false;
    }
  }
  return true;
}

double GradientSet::SquaredNorm() const {
  double sum = 0.0;
  for (const LayerParams& l : layers) {
    for (float v : l.weights.data()) sum += double{v} * v;
    for (float v : l.biases.data()) sum += double{v} * v;
  }
  return sum;
}

void SgdConfig::Validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    Fail(ErrorCode::kConfig, "learning_rate must be positive");
  }
  if (batch_size == 0) Fail(ErrorCode::kConfig, "batch_size must be >= 1");
}

LayerParams GlorotLayer(std::size_t in_dim, std::size_t out_dim,
                        Xoshiro256& rng) {
  const double bound =
      std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
  LayerParams layer{Tensor::Matrix(in_dim, out_dim), Tensor::Vector(out_dim)};
  for (float& w : layer.weights.data()) {
    w = static_cast<float>((2.0 * rng.UniformFloat() - 1.0) * bound);
  }
  return layer;
}

MlpModel InitModel(const ArchDescriptor& arch, std::uint64_t seed) {
  arch.Validate();
  Xoshiro256 rng(seed);
  const std::vector<std::size_t> dims = arch.LayerDims();
  std::vector<LayerParams> layers;
  layers.reserve(dims.size() - 1);
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    layers.push_back(GlorotLayer(dims[k], dims[k + 1], rng));
  }
  return MlpModel(arch, std::move(layers));
}

Tensor Forward(const MlpModel& model, const Tensor& batch) {
  CheckBatch(model, batch);
  std::vector<Tensor> acts = ForwardAll(model, batch);
  Tensor probs = std::move(acts.back());
  RequireFinite(probs, "forward output");
  return probs;
}

double Loss(const Tensor& probs, std::span<const std::uint32_t> labels) {
  CheckLabels(labels, probs.rows(), probs.cols());
  if (labels.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = std::max(static_cast<double>(probs.at(i, labels[i])),
                              kProbabilityFloor);
    sum -= std::log(p);
  }
  return sum / static_cast<double>(labels.size());
}

BackwardResult Backward(const MlpModel& model, const Tensor& batch,
                        std::span<const std::uint32_t> labels) {
  BackwardPass pass = RunBackward(model, batch, labels);
  return BackwardResult{pass.loss, std::move(pass.grads)};
}

void ApplySgd(MlpModel& model, const GradientSet& grads, double lr) {
  if (!grads.CongruentWith(model)) {
    Fail(ErrorCode::kShape, "gradient set is not congruent with the model");
  }
  const float step = static_cast<float>(lr);
  for (std::size_t k = 0; k < model.num_layers(); ++k) {
    auto w = model.mutable_weights(k);
    auto gw = grads.layers[k].weights.data();
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = w[i] - step * gw[i];
    auto b = model.mutable_biases(k);
    auto gb = grads.layers[k].biases.data();
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = b[i] - step * gb[i];
    RequireFinite(model.layer(k).weights, "updated weights");
    RequireFinite(model.layer(k).biases, "updated biases");
  }
}

MlpModel SgdStep(const MlpModel& model, const GradientSet& grads, double lr) {
  MlpModel next = model;
  ApplySgd(next, grads, lr);
  return next;
}

TrainResult Train(MlpModel model, const DatasetShard& shard,
                  const SgdConfig& cfg) {
  cfg.Validate();
  if (shard.empty()) Fail(ErrorCode::kEmptyDataset, "cannot train on 0 samples");
  CheckBatch(model, shard.images());
  CheckLabels(shard.labels(), shard.size(), model.arch().num_classes);

  TrainResult result{std::move(model), {}};
  result.history.reserve(cfg.epochs);
  const std::size_t n = shard.size();
  std::vector<std::size_t> order(n);
  std::vector<std::uint32_t> batch_labels;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Xoshiro256 rng(DeriveSeed({cfg.seed, epoch}));
    Shuffle(std::span<std::size_t>(order), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      const std::span<const std::size_t> idx(order.data() + start, len);
      Tensor batch = GatherRows(shard.images(), idx);
      batch_labels.resize(len);
      for (std::size_t i = 0; i < len; ++i) {
        batch_labels[i] = shard.labels()[idx[i]];
      }
      BackwardPass pass = RunBackward(result.model, batch, batch_labels);
      ApplySgd(result.model, pass.grads, cfg.learning_rate);
      loss_sum += pass.loss * static_cast<double>(len);
      correct += pass.correct;
    }
    result.history.push_back(
        {epoch, loss_sum / static_cast<double>(n),
         static_cast<double>(correct) / static_cast<double>(n)});
  }
  return result;
}

std::size_t Argmax(std::span<const float> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    if (row[j] > row[best]) best = j;
  }
  return best;
}

}  // namespace ecavg
