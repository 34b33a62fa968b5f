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
#ifndef ECAVG_TENSOR_H_
#define ECAVG_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ecavg {

/// Dense row-major float32 array. The element count always equals the
/// product of the shape; constructors reject anything else.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape);
  Tensor(std::vector<std::size_t> shape, std::vector<float> data);

  static Tensor Matrix(std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols});
  }
  static Tensor Vector(std::size_t n) { return Tensor({n}); }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t dim(std::size_t axis) const;

  // Rank-2 conveniences; rank-1 tensors are treated as a single row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  float& at(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  float at(std::size_t r, std::size_t c) const {
    return data_[r * cols() + c];
  }

  std::span<float> row(std::size_t r);
  std::span<const float> row(std::size_t r) const;

  bool AllFinite() const noexcept;

  // Bitwise comparison: distinguishes +0/-0 and compares NaN payloads.
  friend bool operator==(const Tensor& a, const Tensor& b);

  std::string ShapeString() const;

 private:
  std::vector<std::size_t> shape_;
  std::vector<float> data_;
};

// Throws the non-finite error naming `what` if any element is NaN or Inf.
void RequireFinite(const Tensor& t, const char* what);

}  // namespace ecavg

#endif  // ECAVG_TENSOR_H_
