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
#ifndef ECAVG_RNG_H_
#define ECAVG_RNG_H_

#include <array>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace ecavg {

// SplitMix64 finalizer. Used to expand user seeds into generator state and to
// derive independent sub-seeds.
std::uint64_t SplitMix64(std::uint64_t& state);

// Folds a list of values into one seed, e.g. DeriveSeed({seed, epoch}).
std::uint64_t DeriveSeed(std::initializer_list<std::uint64_t> parts);

/// xoshiro256** by Blackman and Vigna. Every random draw in the library
/// goes through this generator so runs are reproducible bit for bit across
/// builds; standard-library distributions are avoided because their output
/// is implementation-defined.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed);

  std::uint64_t Next();

  // Uniform in [0, bound) without modulo bias. bound must be non-zero.
  std::uint64_t Below(std::uint64_t bound);

  // Uniform in [0, 1) with 24 random bits.
  float UniformFloat();

  // Uniform in [0, 1) with 53 random bits.
  double UniformDouble();

  // Standard normal via Box-Muller (one value per call, the pair's second
  // half is discarded).
  double Normal();

 private:
  std::array<std::uint64_t, 4> state_;
};

template <typename T>
void Shuffle(std::span<T> values, Xoshiro256& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.Below(i));
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace ecavg

#endif  // ECAVG_RNG_H_
