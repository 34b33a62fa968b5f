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
#ifndef ECAVG_PROTO_WIRE_H_
#define ECAVG_PROTO_WIRE_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ecavg/error.h"

namespace ecavg::proto {

// Little-endian fixed-width encoder.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { bytes_.push_back(v); }
  void U32(std::uint32_t v);
  void U64(std::uint64_t v);
  void F32(float v);
  void F64(double v);
  void Bytes(std::span<const std::uint8_t> data);
  void F32Array(std::span<const float> values);

  // Writes v as a u32, failing with error_code if it does not fit.
  void Size32(std::size_t v, ErrorCode error_code = ErrorCode::kFormat);

  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }
  std::vector<std::uint8_t> Take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Decoder over a borrowed buffer. Reading past the end raises error_code.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data,
                      ErrorCode error_code = ErrorCode::kFormat)
      : data_(data), error_code_(error_code) {}

  std::uint8_t U8();
  std::uint32_t U32();
  std::uint64_t U64();
  float F32();
  double F64();
  std::span<const std::uint8_t> Bytes(std::size_t n);
  void F32Array(std::span<float> out);

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  std::span<const std::uint8_t> Rest();
  void ExpectEnd(const std::string& what) const;
  [[noreturn]] void Malformed(const std::string& why) const;

 private:
  void Need(std::size_t n) const;

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
  ErrorCode error_code_;
};

}  // namespace ecavg::proto

#endif  // ECAVG_PROTO_WIRE_H_
