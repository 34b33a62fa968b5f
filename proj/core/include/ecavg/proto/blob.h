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
#ifndef ECAVG_PROTO_BLOB_H_
#define ECAVG_PROTO_BLOB_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ecavg/dataset.h"
#include "ecavg/nn.h"
#include "ecavg/proto/wire.h"

namespace ecavg::proto {

// ModelBlob layout, all little-endian:
//   u32 input_dim, u32 num_hidden, u32 hidden[num_hidden], u32 num_classes,
//   then for each layer: f32 weights[in*out] row-major, f32 biases[out].
// The same bytes are the on-disk checkpoint format.
std::vector<std::uint8_t> EncodeModel(const MlpModel& model);
MlpModel DecodeModel(std::span<const std::uint8_t> bytes);

void WriteArch(ByteWriter& w, const ArchDescriptor& arch);
ArchDescriptor ReadArch(ByteReader& r);

void WriteLabelMap(ByteWriter& w, const LabelMap& map);
LabelMap ReadLabelMap(ByteReader& r);

void SaveCheckpoint(const std::filesystem::path& path, const MlpModel& model);
MlpModel LoadCheckpoint(const std::filesystem::path& path);

// Shard blob layout:
//   u32 n, u32 dim, label map (u32 k, u32 ids[k]), u8 pixel encoding,
//   pixels, u32 labels[n].
// Pixel encoding 1 stores bytes b with value b / 255.0f and is chosen only
// when every value round-trips bitwise that way (true for IDX data);
// encoding 0 stores raw f32.
std::vector<std::uint8_t> EncodeShard(const DatasetShard& shard);
DatasetShard DecodeShard(std::span<const std::uint8_t> bytes);

}  // namespace ecavg::proto

#endif  // ECAVG_PROTO_BLOB_H_
