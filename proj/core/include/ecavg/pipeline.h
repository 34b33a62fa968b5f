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
#ifndef ECAVG_PIPELINE_H_
#define ECAVG_PIPELINE_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ecavg/avg.h"
#include "ecavg/dataset.h"
#include "ecavg/metrics.h"
#include "ecavg/nn.h"
#include "ecavg/proto/message.h"
#include "ecavg/proto/session.h"

namespace ecavg {

// The single round every party goes through: local pre-training, averaging
// and head assembly on the server, fine-tuning on the aggregated data, and
// the client update followed by local re-training. The in-process simulator
// and the networked server/client call the same functions, which is what
// makes their results bitwise comparable.

struct ClientConfig {
  std::uint32_t client_id = 0;
  DatasetShard shard;                      // local labels, uploaded in full
  std::optional<DatasetShard> test_shard;  // same label map as shard
  std::vector<std::size_t> hidden_dims;
  std::uint64_t init_seed = 0;
  SgdConfig pretrain;
  SgdConfig retrain;
  UpdateMode update = UpdateMode::kFull;
  // Fraction of the shard (a prefix) the device trains on locally.
  double train_fraction = 1.0;
  bool upload_data = true;
};

struct ClientReport {
  std::uint32_t client_id = 0;
  std::vector<proto::ClientPhase> phases;
  MlpModel pretrained;
  MlpModel updated;  // sliced global model, before re-training
  MlpModel retrained;
  std::vector<EpochStats> pretrain_history;
  std::vector<EpochStats> retrain_history;
  std::optional<MetricReport> before;  // pretrained on test_shard
  std::optional<MetricReport> after;   // retrained on test_shard
};

struct ServerConfig {
  std::size_t num_clients = 1;
  SgdConfig finetune;
  AveragingMode averaging = AveragingMode::kUnweighted;
  HeadMode head = HeadMode::kPlacement;
  std::uint64_t head_seed = 0;
  std::optional<std::size_t> num_global_classes;
  // When set the server trains on this dataset (global labels) and clients
  // skip DATA_UPLOAD.
  std::optional<DatasetShard> resident_dataset;
  std::optional<DatasetShard> test_set;  // global labels
  // When set, registrations with a different backbone are refused.
  std::optional<ArchDescriptor> expected_backbone;
  std::chrono::milliseconds accept_timeout{std::chrono::minutes(10)};
};

struct ServerReport {
  std::vector<std::uint32_t> client_ids;     // ascending
  std::vector<std::uint64_t> client_samples;  // n_i, same order
  std::uint64_t total_samples = 0;            // N of the aggregated dataset
  MlpModel assembled;
  MlpModel finetuned;
  std::vector<EpochStats> finetune_history;
  std::optional<MetricReport> before;  // assembled on test_set
  std::optional<MetricReport> after;   // finetuned on test_set
};

/// One client's contribution as received by the server.
struct ClientUpload {
  std::uint32_t client_id = 0;
  LabelMap label_map;
  MlpModel model;
  proto::TrainSummary summary;
  std::optional<DatasetShard> shard;
};

DatasetShard LocalTrainingSet(const ClientConfig& cfg);
ArchDescriptor ClientArch(const ClientConfig& cfg);

struct PretrainOutcome {
  TrainResult trained;
  proto::TrainSummary summary;
};
PretrainOutcome PretrainClient(const ClientConfig& cfg);

// Pre-trains and evaluates on the test shard; summary receives what the
// client reports in WEIGHTS_UPLOAD.
ClientReport PretrainAndEvaluate(const ClientConfig& cfg,
                                 proto::TrainSummary& summary);

// Aggregates, checks N = sum n_i, assembles and fine-tunes. uploads must be
// sorted by client_id.
ServerReport FineTuneOnServer(const ServerConfig& cfg,
                              std::span<const ClientUpload> uploads);

// Applies the pushed global model and re-trains locally; fills the update
// and re-train fields of report.
void UpdateAndRetrainClient(const ClientConfig& cfg, const MlpModel& global,
                            const LabelMap& label_map, ClientReport& report);

}  // namespace ecavg

#endif  // ECAVG_PIPELINE_H_
