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
#include "ecavg/metrics.h"

#include <algorithm>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "ecavg/error.h"

namespace ecavg {
namespace {

double Ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

constexpr std::size_t kEvalChunk = 1024;

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : num_classes_(num_classes), counts_(num_classes * num_classes, 0) {}

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes,
                                 std::vector<std::uint64_t> counts)
    : num_classes_(num_classes), counts_(std::move(counts)) {
  if (counts_.size() != num_classes_ * num_classes_) {
    Fail(ErrorCode::kEvaluation, "confusion matrix needs " +
                                     std::to_string(num_classes_ * num_classes_) +
                                     " cells, got " +
                                     std::to_string(counts_.size()));
  }
}

void ConfusionMatrix::Add(std::size_t truth, std::size_t predicted,
                          std::uint64_t n) {
  if (truth >= num_classes_ || predicted >= num_classes_) {
    Fail(ErrorCode::kEvaluation, "confusion cell out of range");
  }
  counts_[truth * num_classes_ + predicted] += n;
}

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t sum = 0;
  for (std::uint64_t c : counts_) sum += c;
  return sum;
}

MetricReport Summarize(const ConfusionMatrix& cm) {
  const std::size_t k = cm.num_classes();
  if (k == 0) Fail(ErrorCode::kEmptyEvaluation, "confusion matrix has no classes");
  const std::uint64_t total = cm.total();
  if (total == 0) Fail(ErrorCode::kEmptyEvaluation, "confusion matrix is empty");

  std::vector<std::uint64_t> row_sum(k, 0), col_sum(k, 0);
  std::uint64_t trace = 0;
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) {
      row_sum[r] += cm.at(r, c);
      col_sum[c] += cm.at(r, c);
    }
    trace += cm.at(r, r);
  }

  MetricReport report;
  const double n = static_cast<double>(total);
  report.accuracy = static_cast<double>(trace) / n;
  report.per_class.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    ClassMetrics& m = report.per_class[c];
    const double diag = static_cast<double>(cm.at(c, c));
    m.support = row_sum[c];
    m.precision = Ratio(diag, static_cast<double>(col_sum[c]));
    m.recall = Ratio(diag, static_cast<double>(row_sum[c]));
    m.f1 = Ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
    const double weight = static_cast<double>(m.support) / n;
    report.precision += weight * m.precision;
    report.recall += weight * m.recall;
    report.f1 += weight * m.f1;
  }
  return report;
}

Evaluation Evaluate(const MlpModel& model, const DatasetShard& shard) {
  const std::size_t k = model.arch().num_classes;
  if (shard.label_map().num_local_classes() != k) {
    Fail(ErrorCode::kEvaluation,
         "shard has " + std::to_string(shard.label_map().num_local_classes()) +
             " classes but the model predicts " + std::to_string(k));
  }
  if (shard.input_dim() != model.arch().input_dim) {
    Fail(ErrorCode::kEvaluation, "shard input_dim does not match the model");
  }
  ConfusionMatrix cm(k);
  const std::size_t dim = shard.input_dim();
  for (std::size_t start = 0; start < shard.size(); start += kEvalChunk) {
    const std::size_t len = std::min(kEvalChunk, shard.size() - start);
    auto src = shard.images().data().subspan(start * dim, len * dim);
    Tensor batch({len, dim}, std::vector<float>(src.begin(), src.end()));
    const Tensor probs = Forward(model, batch);
    for (std::size_t i = 0; i < len; ++i) {
      cm.Add(shard.labels()[start + i], Argmax(probs.row(i)));
    }
  }
  MetricReport report = Summarize(cm);
  return Evaluation{std::move(cm), std::move(report)};
}

std::string MetricReportJson(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  j["per_class"] = nlohmann::ordered_json::array();
  for (const ClassMetrics& m : report.per_class) {
    j["per_class"].push_back({{"precision", m.precision},
                              {"recall", m.recall},
                              {"f1", m.f1},
                              {"support", m.support}});
  }
  return j.dump(2);
}

MetricReport MetricReportFromJson(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    MetricReport r;
    r.accuracy = j.at("accuracy").get<double>();
    r.precision = j.at("precision").get<double>();
    r.recall = j.at("recall").get<double>();
    r.f1 = j.at("f1").get<double>();
    for (const auto& c : j.at("per_class")) {
      r.per_class.push_back({c.at("precision").get<double>(),
                             c.at("recall").get<double>(),
                             c.at("f1").get<double>(),
                             c.at("support").get<std::uint64_t>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kReport, std::string("malformed metric report: ") + e.what());
  }
}

std::string MetricCsvFields(const MetricReport& report) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f", report.accuracy,
                report.precision, report.recall, report.f1);
  return buf;
}

}  // namespace ecavg
