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
#include "ecavg/dataset.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <set>

#include "ecavg/error.h"
#include "ecavg/rng.h"

namespace ecavg {
namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<unsigned char> ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (in.bad()) Fail(ErrorCode::kIo, "error reading " + path.string());
  return bytes;
}

std::uint32_t BigEndian32(const std::vector<unsigned char>& bytes,
                          std::size_t offset,
                          const std::filesystem::path& path) {
  if (bytes.size() < offset + 4) {
    Fail(ErrorCode::kIo, path.string() + " is truncated inside its header");
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) |
         std::uint32_t{bytes[offset + 3]};
}

void CheckMagic(std::uint32_t got, std::uint32_t want,
                const std::filesystem::path& path) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "bad IDX magic 0x%08x (want 0x%08x) in ",
                  got, want);
    Fail(ErrorCode::kFormat, buf + path.string());
  }
}

}  // namespace

LabelMap::LabelMap(std::vector<std::uint32_t> local_to_global)
    : local_to_global_(std::move(local_to_global)) {
  std::set<std::uint32_t> seen(local_to_global_.begin(),
                               local_to_global_.end());
  if (seen.size() != local_to_global_.size()) {
    Fail(ErrorCode::kConsistency, "label map entries are not distinct");
  }
}

LabelMap LabelMap::Identity(std::size_t num_classes) {
  std::vector<std::uint32_t> ids(num_classes);
  for (std::size_t j = 0; j < num_classes; ++j) {
    ids[j] = static_cast<std::uint32_t>(j);
  }
  return LabelMap(std::move(ids));
}

std::uint32_t LabelMap::global_of(std::size_t local) const {
  if (local >= local_to_global_.size()) {
    Fail(ErrorCode::kLabel, "local label " + std::to_string(local) +
                                " outside label map of size " +
                                std::to_string(local_to_global_.size()));
  }
  return local_to_global_[local];
}

std::optional<std::uint32_t> LabelMap::local_of(std::uint32_t global) const {
  auto it = std::find(local_to_global_.begin(), local_to_global_.end(), global);
  if (it == local_to_global_.end()) return std::nullopt;
  return static_cast<std::uint32_t>(it - local_to_global_.begin());
}

DatasetShard::DatasetShard(Tensor images, std::vector<std::uint32_t> labels,
                           LabelMap label_map)
    : images_(std::move(images)),
      labels_(std::move(labels)),
      label_map_(std::move(label_map)) {
  if (images_.rank() != 2 || images_.rows() != labels_.size()) {
    Fail(ErrorCode::kConsistency,
         "images " + images_.ShapeString() + " do not match " +
             std::to_string(labels_.size()) + " labels");
  }
  for (std::uint32_t y : labels_) {
    if (y >= label_map_.num_local_classes()) {
      Fail(ErrorCode::kLabel, "label " + std::to_string(y) +
                                  " outside label map of size " +
                                  std::to_string(label_map_.num_local_classes()));
    }
    ++class_counts_[y];
  }
}

DatasetShard DatasetShard::Prefix(std::size_t n) const {
  n = std::min(n, size());
  const std::size_t dim = input_dim();
  std::vector<float> pixels(images_.data().begin(),
                            images_.data().begin() + n * dim);
  return DatasetShard(Tensor({n, dim}, std::move(pixels)),
                      std::vector<std::uint32_t>(labels_.begin(),
                                                 labels_.begin() + n),
                      label_map_);
}

SplitSpec SplitSpec::Contiguous(std::size_t num_classes,
                                std::size_t num_clients) {
  if (num_clients == 0 || num_clients > num_classes) {
    Fail(ErrorCode::kSpec, "cannot split " + std::to_string(num_classes) +
                               " classes across " +
                               std::to_string(num_clients) + " clients");
  }
  SplitSpec spec;
  spec.num_clients = num_clients;
  for (std::size_t c = 0; c < num_classes; ++c) {
    spec.assignment[static_cast<std::uint32_t>(c)] =
        static_cast<std::uint32_t>(c * num_clients / num_classes);
  }
  return spec;
}

LabelMap SplitSpec::ClientMap(std::size_t client) const {
  std::vector<std::uint32_t> ids;
  for (const auto& [global, owner] : assignment) {
    if (owner == client) ids.push_back(global);
  }
  return LabelMap(std::move(ids));
}

DatasetShard LoadIdx(const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path) {
  const std::vector<unsigned char> image_bytes = ReadFile(images_path);
  const std::vector<unsigned char> label_bytes = ReadFile(labels_path);

  CheckMagic(BigEndian32(image_bytes, 0, images_path), kIdxImagesMagic,
             images_path);
  CheckMagic(BigEndian32(label_bytes, 0, labels_path), kIdxLabelsMagic,
             labels_path);
  const std::size_t num_images = BigEndian32(image_bytes, 4, images_path);
  const std::size_t height = BigEndian32(image_bytes, 8, images_path);
  const std::size_t width = BigEndian32(image_bytes, 12, images_path);
  const std::size_t num_labels = BigEndian32(label_bytes, 4, labels_path);
  if (num_images != num_labels) {
    Fail(ErrorCode::kConsistency,
         std::to_string(num_images) + " images but " +
             std::to_string(num_labels) + " labels");
  }
  const std::size_t dim = height * width;
  if (image_bytes.size() < 16 + num_images * dim) {
    Fail(ErrorCode::kIo, images_path.string() + " is truncated");
  }
  if (label_bytes.size() < 8 + num_labels) {
    Fail(ErrorCode::kIo, labels_path.string() + " is truncated");
  }

  std::vector<float> pixels(num_images * dim);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<float>(image_bytes[16 + i]) / 255.0f;
  }
  std::vector<std::uint32_t> labels(num_labels);
  std::uint32_t max_label = 0;
  for (std::size_t i = 0; i < num_labels; ++i) {
    labels[i] = label_bytes[8 + i];
    max_label = std::max(max_label, labels[i]);
  }
  const std::size_t num_classes = num_labels == 0 ? 0 : max_label + 1;
  return DatasetShard(Tensor({num_images, dim}, std::move(pixels)),
                      std::move(labels), LabelMap::Identity(num_classes));
}

std::vector<DatasetShard> SplitByClass(const DatasetShard& full,
                                       const SplitSpec& spec) {
  if (!spec.ratios.empty()) {
    Fail(ErrorCode::kNotImplemented,
         "ratio-based overlapping splits are not implemented");
  }
  if (spec.num_clients == 0) Fail(ErrorCode::kSpec, "split has no clients");
  for (const auto& [global, owner] : spec.assignment) {
    if (owner >= spec.num_clients) {
      Fail(ErrorCode::kSpec, "class " + std::to_string(global) +
                                 " assigned to client " +
                                 std::to_string(owner) + " of " +
                                 std::to_string(spec.num_clients));
    }
  }
  for (const auto& [local, count] : full.class_counts()) {
    const std::uint32_t global = full.label_map().global_of(local);
    if (!spec.assignment.contains(global)) {
      Fail(ErrorCode::kSpec,
           "class " + std::to_string(global) + " is not assigned to a client");
    }
  }

  const std::size_t dim = full.input_dim();
  std::vector<LabelMap> maps;
  std::vector<std::vector<float>> pixels(spec.num_clients);
  std::vector<std::vector<std::uint32_t>> labels(spec.num_clients);
  for (std::size_t c = 0; c < spec.num_clients; ++c) {
    maps.push_back(spec.ClientMap(c));
  }
  for (std::size_t i = 0; i < full.size(); ++i) {
    const std::uint32_t global = full.global_label(i);
    const std::uint32_t owner = spec.assignment.at(global);
    labels[owner].push_back(*maps[owner].local_of(global));
    auto row = full.images().row(i);
    pixels[owner].insert(pixels[owner].end(), row.begin(), row.end());
  }

  std::vector<DatasetShard> shards;
  shards.reserve(spec.num_clients);
  for (std::size_t c = 0; c < spec.num_clients; ++c) {
    const std::size_t n = labels[c].size();
    shards.emplace_back(Tensor({n, dim}, std::move(pixels[c])),
                        std::move(labels[c]), std::move(maps[c]));
  }
  return shards;
}

DatasetShard MergeToGlobal(std::span<const DatasetShard> shards,
                           std::size_t num_global_classes) {
  if (shards.empty()) Fail(ErrorCode::kArity, "no shards to merge");
  const std::size_t dim = shards.front().input_dim();
  std::size_t total = 0;
  for (const DatasetShard& s : shards) {
    if (s.input_dim() != dim) {
      Fail(ErrorCode::kConsistency, "shards disagree on input_dim");
    }
    total += s.size();
  }
  std::vector<float> pixels;
  pixels.reserve(total * dim);
  std::vector<std::uint32_t> labels;
  labels.reserve(total);
  for (const DatasetShard& s : shards) {
    pixels.insert(pixels.end(), s.images().data().begin(),
                  s.images().data().end());
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::uint32_t g = s.global_label(i);
      if (g >= num_global_classes) {
        Fail(ErrorCode::kLabel, "global class " + std::to_string(g) +
                                    " exceeds " +
                                    std::to_string(num_global_classes));
      }
      labels.push_back(g);
    }
  }
  return DatasetShard(Tensor({total, dim}, std::move(pixels)),
                      std::move(labels),
                      LabelMap::Identity(num_global_classes));
}

namespace {

constexpr double kMinCenterSeparation = 6.0;  // in standard deviations

std::vector<std::vector<double>> BlobCenters(std::size_t num_classes,
                                             std::size_t dim,
                                             std::uint64_t seed,
                                             double& radius) {
  Xoshiro256 rng(DeriveSeed({seed, 0xb10b}));
  radius = kMinCenterSeparation *
           std::max(1.0, std::ceil(std::pow(static_cast<double>(num_classes),
                                            1.0 / static_cast<double>(dim))));
  std::vector<std::vector<double>> centers;
  int attempts = 0;
  while (centers.size() < num_classes) {
    std::vector<double> c(dim);
    for (double& v : c) v = (2.0 * rng.UniformDouble() - 1.0) * radius;
    bool far = true;
    for (const auto& other : centers) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        d2 += (c[k] - other[k]) * (c[k] - other[k]);
      }
      if (d2 < kMinCenterSeparation * kMinCenterSeparation) {
        far = false;
        break;
      }
    }
    if (far) {
      centers.push_back(std::move(c));
      attempts = 0;
    } else if (++attempts > 1000) {
      radius *= 1.5;
      attempts = 0;
    }
  }
  return centers;
}

void CheckBlobArgs(std::size_t num_classes, std::size_t dim) {
  if (num_classes == 0 || dim == 0) {
    Fail(ErrorCode::kConfig, "synthetic blobs need num_classes >= 1 and dim >= 1");
  }
}

void CheckNoise(double noise) {
  if (!(noise > 0.0) || !std::isfinite(noise)) {
    Fail(ErrorCode::kConfig, "blob noise must be positive and finite");
  }
}

DatasetShard DrawBlobs(const std::vector<std::vector<double>>& centers,
                       double scale, double noise, std::size_t per_class,
                       Xoshiro256& rng) {
  const std::size_t k = centers.size();
  const std::size_t dim = centers.front().size();
  const std::size_t n = k * per_class;
  std::vector<float> pixels(n * dim);
  std::vector<std::uint32_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cls = i % k;
    labels[i] = static_cast<std::uint32_t>(cls);
    for (std::size_t d = 0; d < dim; ++d) {
      pixels[i * dim + d] =
          static_cast<float>((centers[cls][d] + noise * rng.Normal()) / scale);
    }
  }
  return DatasetShard(Tensor({n, dim}, std::move(pixels)), std::move(labels),
                      LabelMap::Identity(k));
}

}  // namespace

DatasetShard SynthBlobs(std::size_t num_classes, std::size_t per_class,
                        std::size_t dim, std::uint64_t seed, double noise) {
  CheckBlobArgs(num_classes, dim);
  CheckNoise(noise);
  if (per_class == 0) Fail(ErrorCode::kConfig, "per_class must be >= 1");
  double radius = 0.0;
  const auto centers = BlobCenters(num_classes, dim, seed, radius);
  Xoshiro256 rng(DeriveSeed({seed, 0x5a4d}));
  return DrawBlobs(centers, radius, noise, per_class, rng);
}

TrainTestShards SynthBlobsTrainTest(std::size_t num_classes,
                                    std::size_t train_per_class,
                                    std::size_t test_per_class,
                                    std::size_t dim, std::uint64_t seed, double noise) {
  CheckBlobArgs(num_classes, dim);
  CheckNoise(noise);
  if (train_per_class == 0 || test_per_class == 0) {
    Fail(ErrorCode::kConfig, "train and test per_class must be >= 1");
  }
  double radius = 0.0;
  const auto centers = BlobCenters(num_classes, dim, seed, radius);
  Xoshiro256 train_rng(DeriveSeed({seed, 0x5a4d}));
  Xoshiro256 test_rng(DeriveSeed({seed, 0x7e57}));
  return {DrawBlobs(centers, radius, noise, train_per_class, train_rng),
          DrawBlobs(centers, radius, noise, test_per_class, test_rng)};
}

}  // namespace ecavg
