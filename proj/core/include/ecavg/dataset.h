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
#ifndef ECAVG_DATASET_H_
#define ECAVG_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ecavg/tensor.h"

namespace ecavg {

/// Position j holds the global class id of local class j. Entries are
/// pairwise distinct.
class LabelMap {
 public:
  LabelMap() = default;
  explicit LabelMap(std::vector<std::uint32_t> local_to_global);

  static LabelMap Identity(std::size_t num_classes);

  std::size_t num_local_classes() const noexcept {
    return local_to_global_.size();
  }
  std::uint32_t global_of(std::size_t local) const;
  std::optional<std::uint32_t> local_of(std::uint32_t global) const;
  const std::vector<std::uint32_t>& local_to_global() const noexcept {
    return local_to_global_;
  }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;

 private:
  std::vector<std::uint32_t> local_to_global_;
};

/// Labeled samples held by one party. Labels are local indices into
/// label_map; class_counts is recomputed from labels on construction.
class DatasetShard {
 public:
  DatasetShard() = default;
  DatasetShard(Tensor images, std::vector<std::uint32_t> labels,
               LabelMap label_map);

  const Tensor& images() const noexcept { return images_; }
  const std::vector<std::uint32_t>& labels() const noexcept { return labels_; }
  const std::map<std::uint32_t, std::size_t>& class_counts() const noexcept {
    return class_counts_;
  }
  const LabelMap& label_map() const noexcept { return label_map_; }

  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }
  std::size_t input_dim() const { return images_.cols(); }

  std::uint32_t global_label(std::size_t i) const {
    return label_map_.global_of(labels_[i]);
  }

  // The first n samples in their original order, same label map.
  DatasetShard Prefix(std::size_t n) const;

  friend bool operator==(const DatasetShard&, const DatasetShard&) = default;

 private:
  Tensor images_;
  std::vector<std::uint32_t> labels_;
  std::map<std::uint32_t, std::size_t> class_counts_;
  LabelMap label_map_;
};

/// Assignment of global classes to clients. Only disjoint assignment is
/// supported; a non-empty ratios list is reserved for overlapping splits and
/// is rejected by SplitByClass.
struct SplitSpec {
  std::size_t num_clients = 0;
  std::map<std::uint32_t, std::uint32_t> assignment;
  std::vector<double> ratios;

  // Classes [0, K) in equal contiguous blocks, e.g. {0-4, 5-9} for K=10, M=2.
  static SplitSpec Contiguous(std::size_t num_classes, std::size_t num_clients);

  // Global classes owned by client, ascending.
  LabelMap ClientMap(std::size_t client) const;
};

// Reads an IDX3 image file and an IDX1 label file. Pixels are scaled to
// [0, 1] by dividing the byte value by 255.
DatasetShard LoadIdx(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path);

std::vector<DatasetShard> SplitByClass(const DatasetShard& full,
                                       const SplitSpec& spec);

// Concatenates shards in the given order, rewriting labels to global ids under
// an identity map over num_global_classes.
DatasetShard MergeToGlobal(std::span<const DatasetShard> shards,
                           std::size_t num_global_classes);

// Isotropic Gaussian blobs around seeded centers that are at least six unit
// standard deviations apart, rescaled so coordinates stay O(1). noise scales
// the per-sample deviation; above about 2 neighbouring classes overlap.
// Samples are interleaved by class: sample i has label i % num_classes.
DatasetShard SynthBlobs(std::size_t num_classes, std::size_t per_class,
                        std::size_t dim, std::uint64_t seed,
                        double noise = 1.0);

struct TrainTestShards {
  DatasetShard train;
  DatasetShard test;
};

// Train and test draws around the same centers.
TrainTestShards SynthBlobsTrainTest(std::size_t num_classes,
                                    std::size_t train_per_class,
                                    std::size_t test_per_class,
                                    std::size_t dim, std::uint64_t seed,
                                    double noise = 1.0);

}  // namespace ecavg

#endif  // ECAVG_DATASET_H_
