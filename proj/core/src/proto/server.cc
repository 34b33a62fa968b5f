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
#include "ecavg/proto/server.h"

#include <algorithm>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "ecavg/error.h"

namespace ecavg::proto {
namespace {

struct Session {
  std::unique_ptr<Connection> conn;
  ServerSessionTracker tracker{ServerPhase::kAwaitingRegistration};
  bool registered = false;
  ClientUpload upload;
  ArchDescriptor arch;
  bool has_model = false;
};

class Round {
 public:
  explicit Round(const ServerConfig& cfg) : cfg_(cfg) {}

  // Returns false if the round was already aborted.
  bool Add(std::unique_ptr<Session> session) {
    std::lock_guard lock(mu_);
    if (error_) {
      session->conn->Close();
      return false;
    }
    sessions_.push_back(std::move(session));
    return true;
  }

  Session& at(std::size_t i) {
    std::lock_guard lock(mu_);
    return *sessions_[i];
  }

  std::vector<std::unique_ptr<Session>>& sessions() { return sessions_; }

  void Abort(std::exception_ptr error) {
    std::lock_guard lock(mu_);
    if (!error_) error_ = error;
    for (auto& s : sessions_) s->conn->Close();
  }

  std::exception_ptr error() {
    std::lock_guard lock(mu_);
    return error_;
  }

  // Best effort: tells every live session the round is over, then closes.
  void NotifyAndClose(WireCode code, const std::string& text) {
    std::lock_guard lock(mu_);
    for (auto& s : sessions_) {
      try {
        s->conn->Send(MakeError(code, text));
      } catch (const Error&) {
      }
      s->conn->Close();
    }
  }

  void Collect(Session& s) {
    for (;;) {
      Message msg = s.conn->Receive();
      try {
        s.tracker.Admit(msg.kind);
      } catch (const Error& e) {
        s.conn->Send(MakeError(WireCode::kOutOfPhase, e.what()));
        throw;
      }
      switch (msg.kind) {
        case MessageKind::kError: {
          const ErrorPayload err = ParseError(msg);
          Fail(ErrorCode::kProtocol, "client aborted: " + err.text);
        }
        case MessageKind::kRegister:
          OnRegister(s, ParseRegister(msg));
          break;
        case MessageKind::kWeightsUpload:
          OnWeights(s, ParseWeightsUpload(msg));
          break;
        case MessageKind::kDataUpload:
          OnData(s, ParseDataUpload(msg));
          break;
        default:
          Fail(ErrorCode::kProtocol, "unexpected " +
                                         std::string(MessageKindName(msg.kind)));
      }
      if (s.has_model && (s.upload.shard || cfg_.resident_dataset)) {
        s.tracker.Advance(ServerPhase::kFineTuning);
        return;
      }
    }
  }

 private:
  void OnRegister(Session& s, RegisterPayload p) {
    if (p.arch.num_classes != p.label_map.num_local_classes()) {
      s.conn->Send(MakeError(WireCode::kArchMismatch,
                             "head size does not match the label map"));
      return;
    }
    if (cfg_.expected_backbone &&
        (p.arch.input_dim != cfg_.expected_backbone->input_dim ||
         p.arch.hidden_dims != cfg_.expected_backbone->hidden_dims)) {
      s.conn->Send(MakeError(WireCode::kArchMismatch,
                             "backbone " + p.arch.ToString() +
                                 " differs from the server's " +
                                 cfg_.expected_backbone->ToString()));
      return;
    }
    {
      std::lock_guard lock(mu_);
      if (!ids_.insert(p.client_id).second) {
        s.conn->Send(MakeError(WireCode::kDuplicateClient,
                               "client id " + std::to_string(p.client_id) +
                                   " is already registered"));
        return;
      }
    }
    s.registered = true;
    s.upload.client_id = p.client_id;
    s.upload.label_map = std::move(p.label_map);
    s.arch = std::move(p.arch);
    s.tracker.Advance(ServerPhase::kCollecting);
    s.conn->Send(MakeAck());
  }

  void OnWeights(Session& s, WeightsUploadPayload p) {
    if (s.has_model) RejectAndFail(s, WireCode::kOutOfPhase, "weights sent twice");
    if (p.model.arch() != s.arch) {
      RejectAndFail(s, WireCode::kArchMismatch,
                    "uploaded model " + p.model.arch().ToString() +
                        " differs from the registered " + s.arch.ToString());
    }
    s.upload.model = std::move(p.model);
    s.upload.summary = p.summary;
    s.has_model = true;
    s.conn->Send(MakeAck());
  }

  void OnData(Session& s, DatasetShard shard) {
    if (cfg_.resident_dataset) {
      RejectAndFail(s, WireCode::kOutOfPhase,
                    "server holds the dataset; DATA_UPLOAD is not expected");
    }
    if (s.upload.shard) RejectAndFail(s, WireCode::kOutOfPhase, "data sent twice");
    if (shard.label_map() != s.upload.label_map) {
      RejectAndFail(s, WireCode::kConsistency,
                    "data label map differs from the registered one");
    }
    s.upload.shard = std::move(shard);
    s.conn->Send(MakeAck());
  }

  [[noreturn]] void RejectAndFail(Session& s, WireCode code,
                                  const std::string& text) {
    s.conn->Send(MakeError(code, text));
    Fail(ErrorCode::kProtocol, text);
  }

  const ServerConfig& cfg_;
  std::mutex mu_;
  std::vector<std::unique_ptr<Session>> sessions_;
  std::set<std::uint32_t> ids_;
  std::exception_ptr error_;
};

}  // namespace

ServerReport RunServer(const ServerConfig& cfg, Acceptor& acceptor) {
  if (cfg.num_clients == 0) Fail(ErrorCode::kConfig, "server needs M >= 1");
  Round round(cfg);
  std::vector<std::thread> workers;

  auto join_all = [&] {
    for (auto& t : workers) {
      if (t.joinable()) t.join();
    }
  };
  auto abort_round = [&](std::exception_ptr error) {
    round.Abort(error);
    join_all();
    round.NotifyAndClose(WireCode::kAborted, "session aborted");
    std::rethrow_exception(round.error());
  };

  try {
    for (std::size_t i = 0; i < cfg.num_clients; ++i) {
      auto session = std::make_unique<Session>();
      session->conn = acceptor.Accept(cfg.accept_timeout);
      if (!round.Add(std::move(session))) break;
      Session& s = round.at(i);
      workers.emplace_back([&round, &s] {
        try {
          round.Collect(s);
        } catch (...) {
          round.Abort(std::current_exception());
        }
      });
    }
  } catch (...) {
    abort_round(std::current_exception());
  }
  join_all();
  if (round.error()) abort_round(round.error());

  std::vector<Session*> ordered;
  for (auto& s : round.sessions()) ordered.push_back(s.get());
  std::sort(ordered.begin(), ordered.end(), [](Session* a, Session* b) {
    return a->upload.client_id < b->upload.client_id;
  });

  ServerReport report;
  try {
    std::vector<ClientUpload> uploads;
    for (Session* s : ordered) uploads.push_back(s->upload);
    report = FineTuneOnServer(cfg, uploads);

    for (Session* s : ordered) {
      s->tracker.Advance(ServerPhase::kUpdating);
      s->conn->Send(MakeGlobalUpdate({report.finetuned, s->upload.label_map}));
    }
    for (Session* s : ordered) {
      Message msg = s->conn->Receive();
      try {
        s->tracker.Admit(msg.kind);
      } catch (const Error& e) {
        s->conn->Send(MakeError(WireCode::kOutOfPhase, e.what()));
        throw;
      }
      if (msg.kind == MessageKind::kError) {
        Fail(ErrorCode::kProtocol, "client rejected the update: " +
                                       ParseError(msg).text);
      }
      if (ParseAck(msg) != WireCode::kOk) {
        Fail(ErrorCode::kProtocol, "client acknowledged with an error code");
      }
    }
    for (Session* s : ordered) {
      s->conn->Send(MakeDone());
      s->tracker.Advance(ServerPhase::kDone);
      s->conn->Close();
    }
  } catch (...) {
    abort_round(std::current_exception());
  }
  return report;
}

}  // namespace ecavg::proto
