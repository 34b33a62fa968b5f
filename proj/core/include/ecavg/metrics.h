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
#ifndef ECAVG_METRICS_H_
#define ECAVG_METRICS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ecavg/dataset.h"
#include "ecavg/nn.h"

namespace ecavg {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t num_classes);
  ConfusionMatrix(std::size_t num_classes, std::vector<std::uint64_t> counts);

  std::size_t num_classes() const noexcept { return num_classes_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * num_classes_ + predicted];
  }
  void Add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
  std::uint64_t total() const noexcept;
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  friend bool operator==(const ConfusionMatrix&,
                         const ConfusionMatrix&) = default;

 private:
  std::size_t num_classes_ = 0;
  std::vector<std::uint64_t> counts_;
};

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;

  friend bool operator==(const ClassMetrics&, const ClassMetrics&) = default;
};

/// Accuracy plus support-weighted precision, recall and F1. Undefined ratios
/// (0/0) count as 0.
struct MetricReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassMetrics> per_class;

  friend bool operator==(const MetricReport&, const MetricReport&) = default;
};

struct Evaluation {
  ConfusionMatrix confusion;
  MetricReport report;
};

MetricReport Summarize(const ConfusionMatrix& cm);

// Predictions are the argmax of Forward (lowest index on ties).
Evaluation Evaluate(const MlpModel& model, const DatasetShard& shard);

std::string MetricReportJson(const MetricReport& report);
MetricReport MetricReportFromJson(const std::string& text);

// "acc,precision,recall,f1" with four decimals, the layout of a results
// table row.
std::string MetricCsvFields(const MetricReport& report);

}  // namespace ecavg

#endif  // ECAVG_METRICS_H_
