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
#include "ecavg/pipeline.h"

#include <algorithm>
#include <cmath>

#include "ecavg/error.h"

namespace ecavg {

DatasetShard LocalTrainingSet(const ClientConfig& cfg) {
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction <= 1.0)) {
    Fail(ErrorCode::kConfig, "train_fraction must lie in (0, 1]");
  }
  if (cfg.train_fraction == 1.0) return cfg.shard;
  const auto n = static_cast<std::size_t>(
      std::ceil(cfg.train_fraction * static_cast<double>(cfg.shard.size())));
  return cfg.shard.Prefix(n);
}

ArchDescriptor ClientArch(const ClientConfig& cfg) {
  return ArchDescriptor{cfg.shard.input_dim(), cfg.hidden_dims,
                        cfg.shard.label_map().num_local_classes()};
}

PretrainOutcome PretrainClient(const ClientConfig& cfg) {
  MlpModel model = InitModel(ClientArch(cfg), cfg.init_seed);
  PretrainOutcome out{Train(std::move(model), LocalTrainingSet(cfg), cfg.pretrain),
                      {}};
  out.summary.num_samples = cfg.shard.size();
  out.summary.epochs = static_cast<std::uint32_t>(cfg.pretrain.epochs);
  if (!out.trained.history.empty()) {
    out.summary.final_loss = out.trained.history.back().loss;
    out.summary.final_accuracy = out.trained.history.back().accuracy;
  }
  return out;
}

ClientReport PretrainAndEvaluate(const ClientConfig& cfg,
                                 proto::TrainSummary& summary) {
  PretrainOutcome pre = PretrainClient(cfg);
  ClientReport report;
  report.client_id = cfg.client_id;
  report.pretrained = std::move(pre.trained.model);
  report.pretrain_history = std::move(pre.trained.history);
  summary = pre.summary;
  if (cfg.test_shard) {
    report.before = Evaluate(report.pretrained, *cfg.test_shard).report;
  }
  return report;
}

ServerReport FineTuneOnServer(const ServerConfig& cfg,
                              std::span<const ClientUpload> uploads) {
  if (uploads.size() != cfg.num_clients) {
    Fail(ErrorCode::kArity, "expected " + std::to_string(cfg.num_clients) +
                                " client uploads, got " +
                                std::to_string(uploads.size()));
  }
  ServerReport report;
  std::vector<LabelMap> maps;
  std::vector<MlpModel> models;
  for (const ClientUpload& u : uploads) {
    if (!report.client_ids.empty() && u.client_id <= report.client_ids.back()) {
      Fail(ErrorCode::kConsistency, "uploads are not sorted by client id");
    }
    report.client_ids.push_back(u.client_id);
    report.client_samples.push_back(u.summary.num_samples);
    maps.push_back(u.label_map);
    models.push_back(u.model);
  }

  const ArchDescriptor& backbone = models.front().arch();
  GlobalArchPlan plan = MakePlan(maps, backbone.input_dim,
                                 backbone.hidden_dims, cfg.num_global_classes);

  DatasetShard aggregated;
  if (cfg.resident_dataset) {
    aggregated = *cfg.resident_dataset;
  } else {
    std::vector<DatasetShard> shards;
    for (const ClientUpload& u : uploads) {
      if (!u.shard) {
        Fail(ErrorCode::kConsistency,
             "client " + std::to_string(u.client_id) + " uploaded no data");
      }
      if (u.shard->size() != u.summary.num_samples) {
        Fail(ErrorCode::kConsistency,
             "client " + std::to_string(u.client_id) + " declared " +
                 std::to_string(u.summary.num_samples) + " samples but sent " +
                 std::to_string(u.shard->size()));
      }
      if (u.shard->label_map() != u.label_map) {
        Fail(ErrorCode::kConsistency,
             "client " + std::to_string(u.client_id) +
                 " uploaded data under a different label map");
      }
      shards.push_back(*u.shard);
    }
    aggregated = MergeToGlobal(shards, plan.num_global_classes);
  }

  // N = sum of n_i over the clients.
  std::uint64_t declared = 0;
  for (std::uint64_t n : report.client_samples) declared += n;
  report.total_samples = aggregated.size();
  if (report.total_samples != declared) {
    Fail(ErrorCode::kConsistency,
         "aggregated dataset holds " + std::to_string(report.total_samples) +
             " samples but clients declared " + std::to_string(declared));
  }

  AssembleOptions options;
  options.averaging = cfg.averaging;
  options.head = cfg.head;
  options.sample_counts = report.client_samples;
  report.assembled = AssembleGlobal(models, plan, cfg.head_seed, options);
  if (cfg.test_set) report.before = Evaluate(report.assembled, *cfg.test_set).report;

  TrainResult tuned = Train(report.assembled, aggregated, cfg.finetune);
  report.finetuned = std::move(tuned.model);
  report.finetune_history = std::move(tuned.history);
  if (cfg.test_set) report.after = Evaluate(report.finetuned, *cfg.test_set).report;
  return report;
}

void UpdateAndRetrainClient(const ClientConfig& cfg, const MlpModel& global,
                            const LabelMap& label_map, ClientReport& report) {
  if (label_map != cfg.shard.label_map()) {
    Fail(ErrorCode::kSurgery, "update carries a foreign label map");
  }
  report.updated =
      SliceForClient(global, label_map, cfg.update, report.pretrained);
  TrainResult retrained =
      Train(report.updated, LocalTrainingSet(cfg), cfg.retrain);
  report.retrained = std::move(retrained.model);
  report.retrain_history = std::move(retrained.history);
  if (cfg.test_shard) {
    report.after = Evaluate(report.retrained, *cfg.test_shard).report;
  }
}

}  // namespace ecavg
