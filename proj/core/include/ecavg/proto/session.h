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
#ifndef ECAVG_PROTO_SESSION_H_
#define ECAVG_PROTO_SESSION_H_

#include <string_view>
#include <vector>

#include "ecavg/proto/message.h"

namespace ecavg::proto {

enum class ServerPhase {
  kAwaitingRegistration,
  kCollecting,
  kFineTuning,
  kUpdating,
  kDone,
};

enum class ClientPhase {
  kPretrain,
  kUpload,
  kAwaitingUpdate,
  kRetrain,
  kDone,
};

inline constexpr ServerPhase kAllServerPhases[] = {
    ServerPhase::kAwaitingRegistration, ServerPhase::kCollecting,
    ServerPhase::kFineTuning, ServerPhase::kUpdating, ServerPhase::kDone};
inline constexpr ClientPhase kAllClientPhases[] = {
    ClientPhase::kPretrain, ClientPhase::kUpload, ClientPhase::kAwaitingUpdate,
    ClientPhase::kRetrain, ClientPhase::kDone};

std::string_view PhaseName(ServerPhase phase);
std::string_view PhaseName(ClientPhase phase);

// Message kinds a server session may receive from its client in each phase.
// ERROR is accepted wherever the session is live and aborts it.
bool ServerAccepts(ServerPhase phase, MessageKind kind);

// Message kinds a client may receive from the server in each phase.
bool ClientAccepts(ClientPhase phase, MessageKind kind);

/// Linear phase machine. Phases only move forward; every inbound message is
/// checked against the acceptance table of the current phase.
template <typename Phase>
class PhaseTracker {
 public:
  explicit PhaseTracker(Phase initial) : history_{initial} {}

  Phase phase() const noexcept { return history_.back(); }
  const std::vector<Phase>& history() const noexcept { return history_; }

  // Throws a protocol error naming the phase if kind is not legal now.
  void Admit(MessageKind kind) const;

  // Throws a protocol error when next does not come after the current phase.
  void Advance(Phase next);

 private:
  std::vector<Phase> history_;
};

using ServerSessionTracker = PhaseTracker<ServerPhase>;
using ClientSessionTracker = PhaseTracker<ClientPhase>;

}  // namespace ecavg::proto

#endif  // ECAVG_PROTO_SESSION_H_
