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
#ifndef ECAVG_EXPERIMENT_H_
#define ECAVG_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecavg/avg.h"
#include "ecavg/dataset.h"
#include "ecavg/metrics.h"
#include "ecavg/nn.h"
#include "ecavg/pipeline.h"

namespace ecavg::experiment {

inline constexpr int kConfigVersion = 1;

enum class DatasetKind { kMnist, kSynthetic };
enum class TransportKind { kInProcess, kLoopback, kTcp };
enum class ServerData { kUploaded, kResident };

struct DatasetSpec {
  DatasetKind kind = DatasetKind::kSynthetic;
  std::filesystem::path mnist_dir;
  std::size_t train_limit = 0;  // 0 keeps every sample
  std::size_t test_limit = 0;
  std::size_t num_classes = 4;
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 100;
  std::size_t dim = 2;
  std::uint64_t synth_seed = 7;
  double noise = 1.0;
};

struct NetworkSpec {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  std::size_t max_payload_mib = 64;
  int connect_retries = 20;
  int backoff_ms = 100;
  int accept_timeout_s = 600;
};

/// Everything that defines a run. Serialized as a JSON document with a
/// "version" field; see README for the schema.
struct ExperimentConfig {
  DatasetSpec dataset;
  SplitSpec split;
  std::vector<std::size_t> hidden_dims{128};
  SgdConfig pretrain{0.05, 32, 10, 1};
  SgdConfig finetune{1.0, 128, 2, 2};
  SgdConfig retrain{0.05, 32, 2, 3};
  AveragingMode averaging = AveragingMode::kUnweighted;
  HeadMode head = HeadMode::kPlacement;
  UpdateMode update = UpdateMode::kFull;
  bool shared_init = false;
  double client_train_fraction = 1.0;
  bool baseline = true;
  std::uint64_t seed = 42;
  TransportKind transport = TransportKind::kInProcess;
  ServerData server_data = ServerData::kUploaded;
  NetworkSpec network;
  std::filesystem::path output_dir;

  // Checks values and that referenced files exist.
  void Validate() const;
};

// overrides are "dotted.key=value" strings applied before parsing; values are
// read as JSON when they parse as JSON and as plain strings otherwise.
ExperimentConfig ParseExperimentConfig(
    const std::string& json_text, std::span<const std::string> overrides = {});
ExperimentConfig LoadExperimentConfig(
    const std::filesystem::path& path,
    std::span<const std::string> overrides = {});
std::string ExperimentConfigJson(const ExperimentConfig& cfg);

struct PreparedData {
  DatasetShard train;  // global labels
  DatasetShard test;
  std::vector<DatasetShard> client_train;
  std::vector<DatasetShard> client_test;
  std::size_t num_classes = 0;
};

PreparedData PrepareData(const ExperimentConfig& cfg);

ClientConfig MakeClientConfig(const ExperimentConfig& cfg,
                              const PreparedData& data, std::size_t client);
ServerConfig MakeServerConfig(const ExperimentConfig& cfg,
                              const PreparedData& data);

struct ResultRow {
  std::string device;
  std::string setup;
  MetricReport report;
};

struct CurvePoint {
  std::string party;
  std::string phase;
  EpochStats stats;
};

struct BaselineResult {
  MlpModel model;
  std::vector<EpochStats> history;
  MetricReport report;
};

struct RunArtifacts {
  ServerReport server;
  std::vector<ClientReport> clients;
  std::optional<BaselineResult> baseline;
  std::vector<ResultRow> table;
  std::vector<CurvePoint> curves;
  std::string results_csv;
  std::string curves_csv;
  std::string results_json;
};

// Runs split, pre-training, upload, averaging, fine-tuning, update and
// re-training over the configured transport. Writes config.json,
// results.csv, results.json, curves.csv and checkpoints/*.ecm under
// output_dir when it is non-empty. Errors are rethrown with the failing
// phase in the message.
RunArtifacts RunExperiment(const ExperimentConfig& cfg);
RunArtifacts RunExperiment(const ExperimentConfig& cfg,
                           const PreparedData& data);

// A global-architecture model trained from fresh initialization on the
// aggregated data with the fine-tune settings.
BaselineResult RunBaselineServer(const ExperimentConfig& cfg);
BaselineResult RunBaselineServer(const ExperimentConfig& cfg,
                                 const PreparedData& data);

void WriteArtifacts(const RunArtifacts& artifacts,
                    const ExperimentConfig& cfg);

std::vector<ResultRow> LoadResultTable(const std::filesystem::path& run_dir);

enum class TransferSign { kPositive, kNegative, kNone };
std::string_view TransferSignName(TransferSign sign);

struct TransferDelta {
  std::string device;
  std::string comparison;  // e.g. "After update - Before update"
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  TransferSign sign = TransferSign::kNone;  // from the accuracy delta
};

struct ComparisonSummary {
  std::vector<TransferDelta> deltas;
  // kNegative when every delta is negative or zero and at least one is
  // negative; kPositive symmetrically; kNone otherwise.
  TransferSign overall = TransferSign::kNone;

  std::string ToText() const;
  std::string ToJson() const;
};

// After minus before for every edge device, averaged minus baseline for the
// server when a baseline row exists.
ComparisonSummary CompareReport(std::span<const ResultRow> table);

}  // namespace ecavg::experiment

#endif  // ECAVG_EXPERIMENT_H_
