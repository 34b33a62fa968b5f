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
#include "ecavg/experiment.h"

#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ecavg/error.h"
#include "ecavg/proto/blob.h"
#include "ecavg/proto/client.h"
#include "ecavg/proto/server.h"
#include "ecavg/proto/transport.h"
#include "ecavg/rng.h"

namespace ecavg::experiment {
namespace {

using json = nlohmann::ordered_json;

// Seed-derivation tags; keep stable, checkpoints depend on them.
constexpr std::uint64_t kInitTag = 0x1417;
constexpr std::uint64_t kHeadTag = 0x4ead;
constexpr std::uint64_t kBaselineTag = 0xba5e;

constexpr const char* kBeforeUpdate = "Before update";
constexpr const char* kAfterUpdate = "After update";
constexpr const char* kNoPretraining = "No pre-training";
constexpr const char* kAveragedWeights = "Averaged weights";

[[noreturn]] void ConfigError(const std::string& what) {
  Fail(ErrorCode::kConfig, what);
}

void CheckKeys(const json& j, std::initializer_list<const char*> allowed,
               const std::string& where) {
  if (!j.is_object()) ConfigError(where + " must be an object");
  std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.contains(key)) ConfigError("unknown key " + where + "." + key);
  }
}

template <typename T>
T Get(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    ConfigError(where + "." + key + ": " + e.what());
  }
}

template <typename E>
E GetEnum(const json& j, const char* key, E fallback,
          const std::map<std::string, E>& names, const std::string& where) {
  if (!j.contains(key)) return fallback;
  const std::string value = Get<std::string>(j, key, "", where);
  auto it = names.find(value);
  if (it == names.end()) ConfigError(where + "." + key + ": unknown value " + value);
  return it->second;
}

template <typename E>
std::string EnumName(E value, const std::map<std::string, E>& names) {
  for (const auto& [name, v] : names) {
    if (v == value) return name;
  }
  return "?";
}

const std::map<std::string, AveragingMode> kAveragingNames = {
    {"unweighted", AveragingMode::kUnweighted},
    {"sample_weighted", AveragingMode::kSampleWeighted}};
const std::map<std::string, HeadMode> kHeadNames = {
    {"placement", HeadMode::kPlacement}, {"fresh", HeadMode::kFresh}};
const std::map<std::string, UpdateMode> kUpdateNames = {
    {"full", UpdateMode::kFull}, {"backbone_only", UpdateMode::kBackboneOnly}};
const std::map<std::string, TransportKind> kTransportNames = {
    {"inprocess", TransportKind::kInProcess},
    {"loopback", TransportKind::kLoopback},
    {"tcp", TransportKind::kTcp}};
const std::map<std::string, ServerData> kServerDataNames = {
    {"uploaded", ServerData::kUploaded}, {"resident", ServerData::kResident}};

SgdConfig ParseSgd(const json& j, SgdConfig fallback, const std::string& where) {
  CheckKeys(j, {"learning_rate", "batch_size", "epochs", "seed"}, where);
  SgdConfig cfg;
  cfg.learning_rate = Get<double>(j, "learning_rate", fallback.learning_rate, where);
  cfg.batch_size = Get<std::size_t>(j, "batch_size", fallback.batch_size, where);
  cfg.epochs = Get<std::size_t>(j, "epochs", fallback.epochs, where);
  cfg.seed = Get<std::uint64_t>(j, "seed", fallback.seed, where);
  return cfg;
}

json SgdJson(const SgdConfig& cfg) {
  return {{"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},
          {"epochs", cfg.epochs},
          {"seed", cfg.seed}};
}

void ApplyOverride(json& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    ConfigError("override must look like key.path=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &root;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) ConfigError("empty key in override " + assignment);
    if (!node->is_object()) ConfigError("override " + path + " crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string DeviceName(std::size_t client) {
  return "Edge " + std::to_string(client + 1);
}

std::string ReadText(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) Fail(ErrorCode::kIo, "error writing " + path.string());
}

// Re-raises library errors with the failing phase prepended.
template <typename Fn>
auto InPhase(const std::string& phase, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(e.code(), "[" + phase + "] " + e.what());
  }
}

json MetricsJson(const MetricReport& r) {
  return json::parse(MetricReportJson(r));
}

json HistoryJson(const std::vector<EpochStats>& history) {
  json a = json::array();
  for (const EpochStats& s : history) {
    a.push_back({{"epoch", s.epoch}, {"loss", s.loss}, {"accuracy", s.accuracy}});
  }
  return a;
}

}  // namespace

void ExperimentConfig::Validate() const {
  if (dataset.kind == DatasetKind::kMnist) {
    for (const char* name : {"train-images-idx3-ubyte", "train-labels-idx1-ubyte",
                             "t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"}) {
      if (!std::filesystem::exists(dataset.mnist_dir / name)) {
        ConfigError("missing MNIST file " + (dataset.mnist_dir / name).string());
      }
    }
  } else if (dataset.num_classes == 0 || dataset.dim == 0 ||
             dataset.train_per_class == 0 || dataset.test_per_class == 0) {
    ConfigError("synthetic dataset sizes must be >= 1");
  } else if (!(dataset.noise > 0.0)) {
    ConfigError("dataset.noise must be positive");
  }
  if (split.num_clients == 0) ConfigError("split needs at least one client");
  for (const SgdConfig* s : {&pretrain, &finetune, &retrain}) s->Validate();
  for (std::size_t h : hidden_dims) {
    if (h == 0) ConfigError("hidden layer widths must be >= 1");
  }
  if (!(client_train_fraction > 0.0 && client_train_fraction <= 1.0)) {
    ConfigError("client_train_fraction must lie in (0, 1]");
  }
  if (network.max_payload_mib == 0) ConfigError("max_payload_mib must be >= 1");
}

ExperimentConfig ParseExperimentConfig(const std::string& json_text,
                                       std::span<const std::string> overrides) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) ConfigError("config is not valid JSON");
  if (!root.is_object()) ConfigError("config must be a JSON object");
  for (const std::string& o : overrides) ApplyOverride(root, o);

  CheckKeys(root,
            {"version", "seed", "dataset", "split", "model", "pretrain",
             "finetune", "retrain", "averaging", "head", "update",
             "shared_init", "client_train_fraction", "baseline", "transport",
             "server_data", "network", "output_dir"},
            "config");
  const int version = Get<int>(root, "version", kConfigVersion, "config");
  if (version != kConfigVersion) {
    ConfigError("unsupported config version " + std::to_string(version));
  }

  ExperimentConfig cfg;
  cfg.seed = Get<std::uint64_t>(root, "seed", cfg.seed, "config");

  const json ds = root.value("dataset", json::object());
  CheckKeys(ds,
            {"source", "dir", "train_limit", "test_limit", "num_classes",
             "train_per_class", "test_per_class", "dim", "seed", "noise"},
            "dataset");
  cfg.dataset.kind = GetEnum<DatasetKind>(
      ds, "source", DatasetKind::kSynthetic,
      {{"mnist", DatasetKind::kMnist}, {"synthetic", DatasetKind::kSynthetic}},
      "dataset");
  cfg.dataset.mnist_dir = Get<std::string>(ds, "dir", "data/mnist", "dataset");
  cfg.dataset.train_limit = Get<std::size_t>(ds, "train_limit", 0, "dataset");
  cfg.dataset.test_limit = Get<std::size_t>(ds, "test_limit", 0, "dataset");
  cfg.dataset.num_classes =
      Get<std::size_t>(ds, "num_classes", cfg.dataset.num_classes, "dataset");
  cfg.dataset.train_per_class = Get<std::size_t>(
      ds, "train_per_class", cfg.dataset.train_per_class, "dataset");
  cfg.dataset.test_per_class = Get<std::size_t>(
      ds, "test_per_class", cfg.dataset.test_per_class, "dataset");
  cfg.dataset.dim = Get<std::size_t>(ds, "dim", cfg.dataset.dim, "dataset");
  cfg.dataset.synth_seed =
      Get<std::uint64_t>(ds, "seed", cfg.dataset.synth_seed, "dataset");
  cfg.dataset.noise = Get<double>(ds, "noise", cfg.dataset.noise, "dataset");

  const json sp = root.value("split", json::object());
  CheckKeys(sp, {"num_clients", "clients", "ratios"}, "split");
  if (sp.contains("clients")) {
    const auto clients =
        Get<std::vector<std::vector<std::uint32_t>>>(sp, "clients", {}, "split");
    cfg.split.num_clients = clients.size();
    for (std::size_t c = 0; c < clients.size(); ++c) {
      for (std::uint32_t g : clients[c]) {
        if (!cfg.split.assignment.emplace(g, static_cast<std::uint32_t>(c)).second) {
          ConfigError("class " + std::to_string(g) +
                      " is assigned to more than one client");
        }
      }
    }
  } else {
    cfg.split.num_clients = Get<std::size_t>(sp, "num_clients", 2, "split");
  }
  cfg.split.ratios = Get<std::vector<double>>(sp, "ratios", {}, "split");

  const json model = root.value("model", json::object());
  CheckKeys(model, {"hidden"}, "model");
  cfg.hidden_dims =
      Get<std::vector<std::size_t>>(model, "hidden", cfg.hidden_dims, "model");

  cfg.pretrain = ParseSgd(root.value("pretrain", json::object()), cfg.pretrain, "pretrain");
  cfg.finetune = ParseSgd(root.value("finetune", json::object()), cfg.finetune, "finetune");
  cfg.retrain = ParseSgd(root.value("retrain", json::object()), cfg.retrain, "retrain");
  cfg.averaging = GetEnum(root, "averaging", cfg.averaging, kAveragingNames, "config");
  cfg.head = GetEnum(root, "head", cfg.head, kHeadNames, "config");
  cfg.update = GetEnum(root, "update", cfg.update, kUpdateNames, "config");
  cfg.shared_init = Get<bool>(root, "shared_init", cfg.shared_init, "config");
  cfg.client_train_fraction = Get<double>(root, "client_train_fraction",
                                          cfg.client_train_fraction, "config");
  cfg.baseline = Get<bool>(root, "baseline", cfg.baseline, "config");
  cfg.transport = GetEnum(root, "transport", cfg.transport, kTransportNames, "config");
  cfg.server_data =
      GetEnum(root, "server_data", cfg.server_data, kServerDataNames, "config");

  const json net = root.value("network", json::object());
  CheckKeys(net,
            {"host", "port", "max_payload_mib", "connect_retries", "backoff_ms",
             "accept_timeout_s"},
            "network");
  cfg.network.host = Get<std::string>(net, "host", cfg.network.host, "network");
  cfg.network.port = Get<std::uint16_t>(net, "port", cfg.network.port, "network");
  cfg.network.max_payload_mib = Get<std::size_t>(
      net, "max_payload_mib", cfg.network.max_payload_mib, "network");
  cfg.network.connect_retries =
      Get<int>(net, "connect_retries", cfg.network.connect_retries, "network");
  cfg.network.backoff_ms = Get<int>(net, "backoff_ms", cfg.network.backoff_ms, "network");
  cfg.network.accept_timeout_s = Get<int>(
      net, "accept_timeout_s", cfg.network.accept_timeout_s, "network");

  cfg.output_dir = Get<std::string>(root, "output_dir", "", "config");
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path,
                                      std::span<const std::string> overrides) {
  std::ifstream in(path);
  if (!in) ConfigError("cannot open config " + path.string());
  const std::string text((std::istreambuf_iterator<char>(in)),
                         std::istreambuf_iterator<char>());
  return ParseExperimentConfig(text, overrides);
}

std::string ExperimentConfigJson(const ExperimentConfig& cfg) {
  json root;
  root["version"] = kConfigVersion;
  root["seed"] = cfg.seed;
  json ds;
  if (cfg.dataset.kind == DatasetKind::kMnist) {
    ds = {{"source", "mnist"},
          {"dir", cfg.dataset.mnist_dir.string()},
          {"train_limit", cfg.dataset.train_limit},
          {"test_limit", cfg.dataset.test_limit}};
  } else {
    ds = {{"source", "synthetic"},
          {"num_classes", cfg.dataset.num_classes},
          {"train_per_class", cfg.dataset.train_per_class},
          {"test_per_class", cfg.dataset.test_per_class},
          {"dim", cfg.dataset.dim},
          {"seed", cfg.dataset.synth_seed},
          {"noise", cfg.dataset.noise}};
  }
  root["dataset"] = ds;
  json sp;
  if (cfg.split.assignment.empty()) {
    sp["num_clients"] = cfg.split.num_clients;
  } else {
    std::vector<std::vector<std::uint32_t>> clients(cfg.split.num_clients);
    for (const auto& [g, c] : cfg.split.assignment) clients[c].push_back(g);
    sp["clients"] = clients;
  }
  if (!cfg.split.ratios.empty()) sp["ratios"] = cfg.split.ratios;
  root["split"] = sp;
  root["model"] = {{"hidden", cfg.hidden_dims}};
  root["pretrain"] = SgdJson(cfg.pretrain);
  root["finetune"] = SgdJson(cfg.finetune);
  root["retrain"] = SgdJson(cfg.retrain);
  root["averaging"] = EnumName(cfg.averaging, kAveragingNames);
  root["head"] = EnumName(cfg.head, kHeadNames);
  root["update"] = EnumName(cfg.update, kUpdateNames);
  root["shared_init"] = cfg.shared_init;
  root["client_train_fraction"] = cfg.client_train_fraction;
  root["baseline"] = cfg.baseline;
  root["transport"] = EnumName(cfg.transport, kTransportNames);
  root["server_data"] = EnumName(cfg.server_data, kServerDataNames);
  root["network"] = {{"host", cfg.network.host},
                     {"port", cfg.network.port},
                     {"max_payload_mib", cfg.network.max_payload_mib},
                     {"connect_retries", cfg.network.connect_retries},
                     {"backoff_ms", cfg.network.backoff_ms},
                     {"accept_timeout_s", cfg.network.accept_timeout_s}};
  root["output_dir"] = cfg.output_dir.string();
  return root.dump(2) + "\n";
}

PreparedData PrepareData(const ExperimentConfig& cfg) {
  return InPhase("load-data", [&] {
    cfg.Validate();
    PreparedData data;
    if (cfg.dataset.kind == DatasetKind::kMnist) {
      const auto& dir = cfg.dataset.mnist_dir;
      data.train = LoadIdx(dir / "train-images-idx3-ubyte",
                           dir / "train-labels-idx1-ubyte");
      data.test = LoadIdx(dir / "t10k-images-idx3-ubyte",
                          dir / "t10k-labels-idx1-ubyte");
      if (cfg.dataset.train_limit) data.train = data.train.Prefix(cfg.dataset.train_limit);
      if (cfg.dataset.test_limit) data.test = data.test.Prefix(cfg.dataset.test_limit);
      data.num_classes = std::max(data.train.label_map().num_local_classes(),
                                  data.test.label_map().num_local_classes());
      const LabelMap identity = LabelMap::Identity(data.num_classes);
      data.train = DatasetShard(data.train.images(), data.train.labels(), identity);
      data.test = DatasetShard(data.test.images(), data.test.labels(), identity);
    } else {
      TrainTestShards blobs = SynthBlobsTrainTest(
          cfg.dataset.num_classes, cfg.dataset.train_per_class,
          cfg.dataset.test_per_class, cfg.dataset.dim, cfg.dataset.synth_seed,
          cfg.dataset.noise);
      data.train = std::move(blobs.train);
      data.test = std::move(blobs.test);
      data.num_classes = cfg.dataset.num_classes;
    }
    SplitSpec split = cfg.split;
    if (split.assignment.empty() && split.ratios.empty()) {
      split = SplitSpec::Contiguous(data.num_classes, cfg.split.num_clients);
    }
    data.client_train = SplitByClass(data.train, split);
    data.client_test = SplitByClass(data.test, split);
    return data;
  });
}

ClientConfig MakeClientConfig(const ExperimentConfig& cfg,
                              const PreparedData& data, std::size_t client) {
  ClientConfig cc;
  cc.client_id = static_cast<std::uint32_t>(client);
  cc.shard = data.client_train.at(client);
  cc.test_shard = data.client_test.at(client);
  cc.hidden_dims = cfg.hidden_dims;
  cc.init_seed = cfg.shared_init ? DeriveSeed({cfg.seed, kInitTag})
                                 : DeriveSeed({cfg.seed, kInitTag, client});
  cc.pretrain = cfg.pretrain;
  cc.pretrain.seed = DeriveSeed({cfg.pretrain.seed, client});
  cc.retrain = cfg.retrain;
  cc.retrain.seed = DeriveSeed({cfg.retrain.seed, client});
  cc.update = cfg.update;
  cc.train_fraction = cfg.client_train_fraction;
  cc.upload_data = cfg.server_data == ServerData::kUploaded;
  return cc;
}

ServerConfig MakeServerConfig(const ExperimentConfig& cfg,
                              const PreparedData& data) {
  ServerConfig sc;
  sc.num_clients = data.client_train.size();
  sc.finetune = cfg.finetune;
  sc.averaging = cfg.averaging;
  sc.head = cfg.head;
  sc.head_seed = DeriveSeed({cfg.seed, kHeadTag});
  sc.num_global_classes = data.num_classes;
  if (cfg.server_data == ServerData::kResident) sc.resident_dataset = data.train;
  sc.test_set = data.test;
  sc.expected_backbone =
      ArchDescriptor{data.train.input_dim(), cfg.hidden_dims, data.num_classes};
  sc.accept_timeout = std::chrono::seconds(cfg.network.accept_timeout_s);
  return sc;
}

BaselineResult RunBaselineServer(const ExperimentConfig& cfg,
                                 const PreparedData& data) {
  return InPhase("baseline", [&] {
    const ArchDescriptor arch{data.train.input_dim(), cfg.hidden_dims,
                              data.num_classes};
    const DatasetShard aggregated =
        MergeToGlobal(data.client_train, data.num_classes);
    TrainResult trained = Train(InitModel(arch, DeriveSeed({cfg.seed, kBaselineTag})),
                                aggregated, cfg.finetune);
    BaselineResult result;
    result.model = std::move(trained.model);
    result.history = std::move(trained.history);
    result.report = Evaluate(result.model, data.test).report;
    return result;
  });
}

BaselineResult RunBaselineServer(const ExperimentConfig& cfg) {
  return RunBaselineServer(cfg, PrepareData(cfg));
}

namespace {

struct RoundResult {
  ServerReport server;
  std::vector<ClientReport> clients;
};

RoundResult RunInProcess(const ServerConfig& sc,
                         const std::vector<ClientConfig>& ccs) {
  RoundResult out;
  std::vector<ClientUpload> uploads;
  for (const ClientConfig& cc : ccs) {
    InPhase(DeviceName(cc.client_id) + " pretrain", [&] {
      ClientUpload up;
      out.clients.push_back(PretrainAndEvaluate(cc, up.summary));
      up.client_id = cc.client_id;
      up.label_map = cc.shard.label_map();
      up.model = out.clients.back().pretrained;
      if (cc.upload_data) up.shard = cc.shard;
      uploads.push_back(std::move(up));
    });
  }
  out.server = InPhase("server fine-tune", [&] { return FineTuneOnServer(sc, uploads); });
  for (std::size_t i = 0; i < ccs.size(); ++i) {
    InPhase(DeviceName(i) + " update", [&] {
      UpdateAndRetrainClient(ccs[i], out.server.finetuned,
                             ccs[i].shard.label_map(), out.clients[i]);
    });
    using proto::ClientPhase;
    out.clients[i].phases = {ClientPhase::kPretrain, ClientPhase::kUpload,
                             ClientPhase::kAwaitingUpdate, ClientPhase::kRetrain,
                             ClientPhase::kDone};
  }
  return out;
}

RoundResult RunNetworked(const ServerConfig& sc,
                         const std::vector<ClientConfig>& ccs,
                         proto::Acceptor& acceptor,
                         const proto::ConnectFn& connect) {
  RoundResult out;
  out.clients.resize(ccs.size());
  std::exception_ptr server_error;
  std::vector<std::exception_ptr> client_errors(ccs.size());

  std::thread server([&] {
    try {
      out.server = proto::RunServer(sc, acceptor);
    } catch (...) {
      server_error = std::current_exception();
    }
  });
  std::vector<std::thread> clients;
  for (std::size_t i = 0; i < ccs.size(); ++i) {
    clients.emplace_back([&, i] {
      try {
        out.clients[i] = proto::RunClient(ccs[i], connect);
      } catch (...) {
        client_errors[i] = std::current_exception();
      }
    });
  }
  for (auto& t : clients) t.join();
  server.join();

  if (server_error) InPhase("server", [&] { std::rethrow_exception(server_error); });
  for (std::size_t i = 0; i < ccs.size(); ++i) {
    if (client_errors[i]) {
      InPhase(DeviceName(i), [&] { std::rethrow_exception(client_errors[i]); });
    }
  }
  return out;
}

std::string ResultsCsv(const std::vector<ResultRow>& table) {
  std::string out = "Device,Setup,Acc,Precision,Recall,F1\n";
  for (const ResultRow& row : table) {
    out += row.device + "," + row.setup + "," + MetricCsvFields(row.report) + "\n";
  }
  return out;
}

std::string CurvesCsv(const std::vector<CurvePoint>& curves) {
  std::string out = "party,phase,epoch,loss,accuracy\n";
  for (const CurvePoint& p : curves) {
    out += p.party + "," + p.phase + "," + std::to_string(p.stats.epoch) + "," +
           Fixed(p.stats.loss, 8) + "," + Fixed(p.stats.accuracy, 8) + "\n";
  }
  return out;
}

std::string ResultsJson(const RunArtifacts& a) {
  json root;
  json rows = json::array();
  for (const ResultRow& row : a.table) {
    rows.push_back({{"device", row.device},
                    {"setup", row.setup},
                    {"metrics", MetricsJson(row.report)}});
  }
  root["rows"] = rows;
  json server;
  server["client_ids"] = a.server.client_ids;
  server["client_samples"] = a.server.client_samples;
  server["total_samples"] = a.server.total_samples;
  if (a.server.before) server["assembled_metrics"] = MetricsJson(*a.server.before);
  server["finetune_history"] = HistoryJson(a.server.finetune_history);
  root["server"] = server;
  json clients = json::array();
  for (const ClientReport& c : a.clients) {
    json phases = json::array();
    for (auto p : c.phases) phases.push_back(std::string(proto::PhaseName(p)));
    clients.push_back({{"client_id", c.client_id},
                       {"phases", phases},
                       {"pretrain_history", HistoryJson(c.pretrain_history)},
                       {"retrain_history", HistoryJson(c.retrain_history)}});
  }
  root["clients"] = clients;
  if (a.baseline) root["baseline_history"] = HistoryJson(a.baseline->history);
  return root.dump(2) + "\n";
}

}  // namespace

RunArtifacts RunExperiment(const ExperimentConfig& cfg,
                           const PreparedData& data) {
  const ServerConfig sc = MakeServerConfig(cfg, data);
  std::vector<ClientConfig> ccs;
  for (std::size_t i = 0; i < data.client_train.size(); ++i) {
    ccs.push_back(MakeClientConfig(cfg, data, i));
  }
  const std::size_t max_payload = cfg.network.max_payload_mib << 20;

  RoundResult round;
  switch (cfg.transport) {
    case TransportKind::kInProcess:
      round = RunInProcess(sc, ccs);
      break;
    case TransportKind::kLoopback: {
      proto::LoopbackNetwork net(max_payload);
      round = RunNetworked(sc, ccs, net.acceptor(), [&] { return net.Connect(); });
      break;
    }
    case TransportKind::kTcp: {
      auto listener = InPhase("server listen", [&] {
        return std::make_unique<proto::TcpListener>(cfg.network.host,
                                                    cfg.network.port, max_payload);
      });
      const proto::ConnectOptions opts{
          cfg.network.connect_retries,
          std::chrono::milliseconds(cfg.network.backoff_ms), max_payload};
      const std::uint16_t port = listener->port();
      round = RunNetworked(sc, ccs, *listener, [&, port] {
        return proto::TcpConnect(cfg.network.host, port, opts);
      });
      break;
    }
  }

  RunArtifacts a;
  a.server = std::move(round.server);
  a.clients = std::move(round.clients);
  if (cfg.baseline) a.baseline = RunBaselineServer(cfg, data);

  for (std::size_t i = 0; i < a.clients.size(); ++i) {
    const ClientReport& c = a.clients[i];
    a.table.push_back({DeviceName(i), kBeforeUpdate, *c.before});
    a.table.push_back({DeviceName(i), kAfterUpdate, *c.after});
    const std::string party = "edge" + std::to_string(i + 1);
    for (const EpochStats& s : c.pretrain_history) a.curves.push_back({party, "pretrain", s});
    for (const EpochStats& s : c.retrain_history) a.curves.push_back({party, "retrain", s});
  }
  if (a.baseline) a.table.push_back({"Server", kNoPretraining, a.baseline->report});
  a.table.push_back({"Server", kAveragedWeights, *a.server.after});
  for (const EpochStats& s : a.server.finetune_history) {
    a.curves.push_back({"server", "finetune", s});
  }
  if (a.baseline) {
    for (const EpochStats& s : a.baseline->history) {
      a.curves.push_back({"server", "baseline", s});
    }
  }
  a.results_csv = ResultsCsv(a.table);
  a.curves_csv = CurvesCsv(a.curves);
  a.results_json = ResultsJson(a);
  if (!cfg.output_dir.empty()) {
    InPhase("write-artifacts", [&] { WriteArtifacts(a, cfg); });
  }
  return a;
}

RunArtifacts RunExperiment(const ExperimentConfig& cfg) {
  return RunExperiment(cfg, PrepareData(cfg));
}

void WriteArtifacts(const RunArtifacts& a, const ExperimentConfig& cfg) {
  const auto& dir = cfg.output_dir;
  std::filesystem::create_directories(dir / "checkpoints");
  WriteText(dir / "config.json", ExperimentConfigJson(cfg));
  WriteText(dir / "results.csv", a.results_csv);
  WriteText(dir / "curves.csv", a.curves_csv);
  WriteText(dir / "results.json", a.results_json);
  const auto ckpt = dir / "checkpoints";
  for (std::size_t i = 0; i < a.clients.size(); ++i) {
    const std::string stem = "edge" + std::to_string(i + 1);
    proto::SaveCheckpoint(ckpt / (stem + "_before.ecm"), a.clients[i].pretrained);
    proto::SaveCheckpoint(ckpt / (stem + "_after.ecm"), a.clients[i].retrained);
  }
  proto::SaveCheckpoint(ckpt / "server_assembled.ecm", a.server.assembled);
  proto::SaveCheckpoint(ckpt / "server_averaged.ecm", a.server.finetuned);
  if (a.baseline) {
    proto::SaveCheckpoint(ckpt / "server_baseline.ecm", a.baseline->model);
  }
}

std::vector<ResultRow> LoadResultTable(const std::filesystem::path& run_dir) {
  const std::string text = ReadText(run_dir / "results.json");
  const json root = json::parse(text, nullptr, false);
  if (root.is_discarded() || !root.contains("rows")) {
    Fail(ErrorCode::kReport, "results.json in " + run_dir.string() + " is malformed");
  }
  std::vector<ResultRow> rows;
  for (const auto& r : root.at("rows")) {
    try {
      rows.push_back({r.at("device").get<std::string>(),
                      r.at("setup").get<std::string>(),
                      MetricReportFromJson(r.at("metrics").dump())});
    } catch (const json::exception& e) {
      Fail(ErrorCode::kReport, std::string("malformed result row: ") + e.what());
    }
  }
  return rows;
}

std::string_view TransferSignName(TransferSign sign) {
  switch (sign) {
    case TransferSign::kPositive: return "positive transfer";
    case TransferSign::kNegative: return "negative transfer";
    case TransferSign::kNone: return "no transfer";
  }
  return "unknown";
}

ComparisonSummary CompareReport(std::span<const ResultRow> table) {
  if (table.empty()) Fail(ErrorCode::kReport, "result table is empty");
  std::vector<std::string> devices;
  std::map<std::pair<std::string, std::string>, const MetricReport*> index;
  for (const ResultRow& row : table) {
    if (std::find(devices.begin(), devices.end(), row.device) == devices.end()) {
      devices.push_back(row.device);
    }
    index[{row.device, row.setup}] = &row.report;
  }
  auto lookup = [&](const std::string& device, const char* setup) {
    auto it = index.find({device, setup});
    if (it == index.end()) {
      Fail(ErrorCode::kReport, "missing row " + device + " / " + setup);
    }
    return it->second;
  };
  auto delta = [](const std::string& device, const std::string& comparison,
                  const MetricReport& after, const MetricReport& before) {
    TransferDelta d;
    d.device = device;
    d.comparison = comparison;
    d.accuracy = after.accuracy - before.accuracy;
    d.precision = after.precision - before.precision;
    d.recall = after.recall - before.recall;
    d.f1 = after.f1 - before.f1;
    d.sign = d.accuracy > 0.0   ? TransferSign::kPositive
             : d.accuracy < 0.0 ? TransferSign::kNegative
                                : TransferSign::kNone;
    return d;
  };

  ComparisonSummary summary;
  for (const std::string& device : devices) {
    if (device == "Server") {
      const MetricReport* averaged = lookup(device, kAveragedWeights);
      if (index.contains({device, kNoPretraining})) {
        summary.deltas.push_back(delta(device,
                                       std::string(kAveragedWeights) + " - " + kNoPretraining,
                                       *averaged, *lookup(device, kNoPretraining)));
      }
    } else {
      summary.deltas.push_back(delta(device,
                                     std::string(kAfterUpdate) + " - " + kBeforeUpdate,
                                     *lookup(device, kAfterUpdate),
                                     *lookup(device, kBeforeUpdate)));
    }
  }
  if (!index.contains({"Server", kAveragedWeights})) {
    Fail(ErrorCode::kReport, "missing row Server / Averaged weights");
  }
  bool any_pos = false, any_neg = false;
  for (const TransferDelta& d : summary.deltas) {
    any_pos |= d.sign == TransferSign::kPositive;
    any_neg |= d.sign == TransferSign::kNegative;
  }
  summary.overall = any_neg && !any_pos   ? TransferSign::kNegative
                    : any_pos && !any_neg ? TransferSign::kPositive
                                          : TransferSign::kNone;
  return summary;
}

std::string ComparisonSummary::ToText() const {
  std::string out;
  for (const TransferDelta& d : deltas) {
    out += d.device + " (" + d.comparison + "): acc " + Fixed(d.accuracy, 4) +
           ", precision " + Fixed(d.precision, 4) + ", recall " +
           Fixed(d.recall, 4) + ", f1 " + Fixed(d.f1, 4) + " -> " +
           std::string(TransferSignName(d.sign)) + "\n";
  }
  out += "overall: " + std::string(TransferSignName(overall)) + "\n";
  return out;
}

std::string ComparisonSummary::ToJson() const {
  json root;
  json arr = json::array();
  for (const TransferDelta& d : deltas) {
    arr.push_back({{"device", d.device},
                   {"comparison", d.comparison},
                   {"accuracy", d.accuracy},
                   {"precision", d.precision},
                   {"recall", d.recall},
                   {"f1", d.f1},
                   {"sign", TransferSignName(d.sign)}});
  }
  root["deltas"] = arr;
  root["overall"] = TransferSignName(overall);
  return root.dump(2) + "\n";
}

}  // namespace ecavg::experiment
