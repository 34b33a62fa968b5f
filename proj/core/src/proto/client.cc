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
#include "ecavg/proto/client.h"

#include "ecavg/error.h"

namespace ecavg::proto {
namespace {

class ClientSession {
 public:
  ClientSession(Connection& conn, ClientSessionTracker& tracker)
      : conn_(conn), tracker_(tracker) {}

  Message Expect(MessageKind want) {
    Message msg = conn_.Receive();
    try {
      tracker_.Admit(msg.kind);
    } catch (const Error& e) {
      try {
        conn_.Send(MakeError(WireCode::kOutOfPhase, e.what()));
      } catch (const Error&) {
      }
      throw;
    }
    if (msg.kind == MessageKind::kError) {
      const ErrorPayload err = ParseError(msg);
      Fail(ErrorCode::kProtocol, "server refused: " + err.text);
    }
    if (msg.kind != want) {
      Fail(ErrorCode::kProtocol, "expected " + std::string(MessageKindName(want)) +
                                     ", got " +
                                     std::string(MessageKindName(msg.kind)));
    }
    return msg;
  }

  void Request(const Message& msg) {
    conn_.Send(msg);
    if (ParseAck(Expect(MessageKind::kAck)) != WireCode::kOk) {
      Fail(ErrorCode::kProtocol, "server acknowledged with an error code");
    }
  }

 private:
  Connection& conn_;
  ClientSessionTracker& tracker_;
};

}  // namespace

ClientReport RunClient(const ClientConfig& cfg, const ConnectFn& connect) {
  if (cfg.shard.empty()) Fail(ErrorCode::kEmptyDataset, "client shard is empty");
  ClientSessionTracker tracker(ClientPhase::kPretrain);
  TrainSummary summary;
  ClientReport report = PretrainAndEvaluate(cfg, summary);

  tracker.Advance(ClientPhase::kUpload);
  std::unique_ptr<Connection> conn = connect();
  ClientSession session(*conn, tracker);
  GlobalUpdatePayload update;
  try {
    session.Request(MakeRegister(
        {cfg.client_id, cfg.shard.label_map(), report.pretrained.arch()}));
    session.Request(MakeWeightsUpload({report.pretrained, summary}));
    if (cfg.upload_data) session.Request(MakeDataUpload(cfg.shard));

    tracker.Advance(ClientPhase::kAwaitingUpdate);
    update = ParseGlobalUpdate(session.Expect(MessageKind::kGlobalUpdate));

    tracker.Advance(ClientPhase::kRetrain);
    conn->Send(MakeAck());
    ParseDone(session.Expect(MessageKind::kDone));
  } catch (...) {
    conn->Close();
    throw;
  }
  conn->Close();

  UpdateAndRetrainClient(cfg, update.global, update.label_map, report);
  tracker.Advance(ClientPhase::kDone);
  report.phases = tracker.history();
  return report;
}

}  // namespace ecavg::proto
