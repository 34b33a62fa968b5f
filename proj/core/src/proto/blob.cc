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
#include "ecavg/proto/blob.h"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include "ecavg/error.h"

namespace ecavg::proto {
namespace {

constexpr std::uint8_t kPixelsF32 = 0;
constexpr std::uint8_t kPixelsU8 = 1;

// Dimension cap while decoding, so a corrupt header cannot request absurd
// allocations before the length check fails.
constexpr std::uint32_t kMaxDim = 1u << 24;

bool PixelsAreBytes(std::span<const float> pixels) {
  for (float v : pixels) {
    const float scaled = v * 255.0f;
    if (!(scaled >= 0.0f && scaled <= 255.0f)) return false;
    const auto b = static_cast<std::uint8_t>(std::lround(scaled));
    const float back = static_cast<float>(b) / 255.0f;
    if (std::bit_cast<std::uint32_t>(back) != std::bit_cast<std::uint32_t>(v)) {
      return false;
    }
  }
  return true;
}

}  // namespace

void WriteArch(ByteWriter& w, const ArchDescriptor& arch) {
  w.Size32(arch.input_dim);
  w.Size32(arch.hidden_dims.size());
  for (std::size_t h : arch.hidden_dims) w.Size32(h);
  w.Size32(arch.num_classes);
}

ArchDescriptor ReadArch(ByteReader& r) {
  ArchDescriptor arch;
  arch.input_dim = r.U32();
  const std::uint32_t num_hidden = r.U32();
  if (num_hidden > r.remaining() / 4) r.Malformed("hidden layer count");
  arch.hidden_dims.resize(num_hidden);
  for (std::size_t& h : arch.hidden_dims) h = r.U32();
  arch.num_classes = r.U32();
  for (std::size_t d : arch.LayerDims()) {
    if (d == 0 || d > kMaxDim) r.Malformed("layer dimension " + std::to_string(d));
  }
  return arch;
}

void WriteLabelMap(ByteWriter& w, const LabelMap& map) {
  w.Size32(map.num_local_classes());
  for (std::uint32_t g : map.local_to_global()) w.U32(g);
}

LabelMap ReadLabelMap(ByteReader& r) {
  const std::uint32_t k = r.U32();
  if (k > r.remaining() / 4) r.Malformed("label map size");
  std::vector<std::uint32_t> ids(k);
  for (std::uint32_t& g : ids) g = r.U32();
  try {
    return LabelMap(std::move(ids));
  } catch (const Error& e) {
    r.Malformed(e.what());
  }
}

std::vector<std::uint8_t> EncodeModel(const MlpModel& model) {
  ByteWriter w;
  WriteArch(w, model.arch());
  for (const LayerParams& layer : model.layers()) {
    w.F32Array(layer.weights.data());
    w.F32Array(layer.biases.data());
  }
  return w.Take();
}

MlpModel DecodeModel(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::kFormat);
  ArchDescriptor arch = ReadArch(r);
  const std::vector<std::size_t> dims = arch.LayerDims();
  std::vector<LayerParams> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    if (dims[k] * dims[k + 1] > r.remaining() / 4) r.Malformed("layer weights");
    LayerParams layer{Tensor::Matrix(dims[k], dims[k + 1]),
                      Tensor::Vector(dims[k + 1])};
    r.F32Array(layer.weights.data());
    r.F32Array(layer.biases.data());
    layers.push_back(std::move(layer));
  }
  r.ExpectEnd("model parameters");
  return MlpModel(std::move(arch), std::move(layers));
}

void SaveCheckpoint(const std::filesystem::path& path, const MlpModel& model) {
  const std::vector<std::uint8_t> bytes = EncodeModel(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIo, "error writing " + path.string());
}

MlpModel LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return DecodeModel(bytes);
}

std::vector<std::uint8_t> EncodeShard(const DatasetShard& shard) {
  ByteWriter w;
  w.Size32(shard.size());
  w.Size32(shard.images().cols());
  WriteLabelMap(w, shard.label_map());
  const auto pixels = shard.images().data();
  if (PixelsAreBytes(pixels)) {
    w.U8(kPixelsU8);
    for (float v : pixels) w.U8(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
  } else {
    w.U8(kPixelsF32);
    w.F32Array(pixels);
  }
  for (std::uint32_t y : shard.labels()) w.U32(y);
  return w.Take();
}

DatasetShard DecodeShard(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::kFormat);
  const std::size_t n = r.U32();
  const std::size_t dim = r.U32();
  if (dim == 0 || dim > kMaxDim) r.Malformed("shard input_dim");
  LabelMap map = ReadLabelMap(r);
  const std::uint8_t encoding = r.U8();
  std::vector<float> pixels;
  if (encoding == kPixelsU8) {
    if (n * dim > r.remaining()) r.Malformed("shard pixels");
    pixels.resize(n * dim);
    auto raw = r.Bytes(n * dim);
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      pixels[i] = static_cast<float>(raw[i]) / 255.0f;
    }
  } else if (encoding == kPixelsF32) {
    if (n * dim > r.remaining() / 4) r.Malformed("shard pixels");
    pixels.resize(n * dim);
    r.F32Array(pixels);
  } else {
    r.Malformed("unknown pixel encoding " + std::to_string(encoding));
  }
  if (n > r.remaining() / 4) r.Malformed("shard labels");
  std::vector<std::uint32_t> labels(n);
  for (std::uint32_t& y : labels) y = r.U32();
  r.ExpectEnd("shard labels");
  try {
    return DatasetShard(Tensor({n, dim}, std::move(pixels)), std::move(labels),
                        std::move(map));
  } catch (const Error& e) {
    r.Malformed(e.what());
  }
}

}  // namespace ecavg::proto
