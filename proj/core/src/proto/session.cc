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
#include "ecavg/proto/session.h"

#include <string>

#include "ecavg/error.h"

namespace ecavg::proto {
namespace {

bool Accepts(ServerPhase phase, MessageKind kind) {
  return ServerAccepts(phase, kind);
}
bool Accepts(ClientPhase phase, MessageKind kind) {
  return ClientAccepts(phase, kind);
}

}  // namespace

std::string_view PhaseName(ServerPhase phase) {
  switch (phase) {
    case ServerPhase::kAwaitingRegistration: return "awaiting_registration";
    case ServerPhase::kCollecting: return "collecting";
    case ServerPhase::kFineTuning: return "fine_tuning";
    case ServerPhase::kUpdating: return "updating";
    case ServerPhase::kDone: return "done";
  }
  return "unknown";
}

std::string_view PhaseName(ClientPhase phase) {
  switch (phase) {
    case ClientPhase::kPretrain: return "pretrain";
    case ClientPhase::kUpload: return "upload";
    case ClientPhase::kAwaitingUpdate: return "awaiting_update";
    case ClientPhase::kRetrain: return "retrain";
    case ClientPhase::kDone: return "done";
  }
  return "unknown";
}

bool ServerAccepts(ServerPhase phase, MessageKind kind) {
  switch (phase) {
    case ServerPhase::kAwaitingRegistration:
      return kind == MessageKind::kRegister || kind == MessageKind::kError;
    case ServerPhase::kCollecting:
      return kind == MessageKind::kWeightsUpload ||
             kind == MessageKind::kDataUpload || kind == MessageKind::kError;
    case ServerPhase::kFineTuning:
      return kind == MessageKind::kError;
    case ServerPhase::kUpdating:
      return kind == MessageKind::kAck || kind == MessageKind::kError;
    case ServerPhase::kDone:
      return false;
  }
  return false;
}

bool ClientAccepts(ClientPhase phase, MessageKind kind) {
  switch (phase) {
    case ClientPhase::kPretrain:
      return false;
    case ClientPhase::kUpload:
      return kind == MessageKind::kAck || kind == MessageKind::kError;
    case ClientPhase::kAwaitingUpdate:
      return kind == MessageKind::kGlobalUpdate || kind == MessageKind::kError;
    case ClientPhase::kRetrain:
      return kind == MessageKind::kDone || kind == MessageKind::kError;
    case ClientPhase::kDone:
      return false;
  }
  return false;
}

template <typename Phase>
void PhaseTracker<Phase>::Admit(MessageKind kind) const {
  if (!Accepts(phase(), kind)) {
    Fail(ErrorCode::kProtocol, std::string(MessageKindName(kind)) +
                                   " is not legal in phase " +
                                   std::string(PhaseName(phase())));
  }
}

template <typename Phase>
void PhaseTracker<Phase>::Advance(Phase next) {
  if (static_cast<int>(next) <= static_cast<int>(phase())) {
    Fail(ErrorCode::kProtocol, "cannot move from phase " +
                                   std::string(PhaseName(phase())) + " to " +
                                   std::string(PhaseName(next)));
  }
  history_.push_back(next);
}

template class PhaseTracker<ServerPhase>;
template class PhaseTracker<ClientPhase>;

}  // namespace ecavg::proto
