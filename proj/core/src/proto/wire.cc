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
#include "ecavg/proto/wire.h"

#include <bit>
#include <limits>

namespace ecavg::proto {

void ByteWriter::U32(std::uint32_t v) {
  for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::U64(std::uint64_t v) {
  for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::F32(float v) { U32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::F64(double v) { U64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::Bytes(std::span<const std::uint8_t> data) {
  bytes_.insert(bytes_.end(), data.begin(), data.end());
}

void ByteWriter::F32Array(std::span<const float> values) {
  bytes_.reserve(bytes_.size() + values.size() * 4);
  for (float v : values) F32(v);
}

void ByteWriter::Size32(std::size_t v, ErrorCode error_code) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    Fail(error_code, "value " + std::to_string(v) + " does not fit in u32");
  }
  U32(static_cast<std::uint32_t>(v));
}

void ByteReader::Need(std::size_t n) const {
  if (remaining() < n) {
    Malformed("needs " + std::to_string(n) + " more bytes, " +
              std::to_string(remaining()) + " left");
  }
}

void ByteReader::Malformed(const std::string& why) const {
  Fail(error_code_, "malformed encoding: " + why);
}

std::uint8_t ByteReader::U8() {
  Need(1);
  return data_[pos_++];
}

std::uint32_t ByteReader::U32() {
  Need(4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{data_[pos_ + i]} << (8 * i);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::U64() {
  Need(8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{data_[pos_ + i]} << (8 * i);
  pos_ += 8;
  return v;
}

float ByteReader::F32() { return std::bit_cast<float>(U32()); }

double ByteReader::F64() { return std::bit_cast<double>(U64()); }

std::span<const std::uint8_t> ByteReader::Bytes(std::size_t n) {
  Need(n);
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::F32Array(std::span<float> out) {
  Need(out.size() * 4);
  for (float& v : out) v = F32();
}

std::span<const std::uint8_t> ByteReader::Rest() { return Bytes(remaining()); }

void ByteReader::ExpectEnd(const std::string& what) const {
  if (remaining() != 0) {
    Malformed(std::to_string(remaining()) + " trailing bytes after " + what);
  }
}

}  // namespace ecavg::proto
