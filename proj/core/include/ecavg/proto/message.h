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
#ifndef ECAVG_PROTO_MESSAGE_H_
#define ECAVG_PROTO_MESSAGE_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecavg/dataset.h"
#include "ecavg/nn.h"

namespace ecavg::proto {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 6;
inline constexpr std::size_t kDefaultMaxPayload = std::size_t{64} << 20;

// Frame: u8 version, u8 kind, u32 payload_len (LE), payload bytes.
enum class MessageKind : std::uint8_t {
  kRegister = 1,
  kWeightsUpload = 2,
  kDataUpload = 3,
  kGlobalUpdate = 4,
  kAck = 5,
  kError = 6,
  kDone = 7,
};

inline constexpr MessageKind kAllMessageKinds[] = {
    MessageKind::kRegister,     MessageKind::kWeightsUpload,
    MessageKind::kDataUpload,   MessageKind::kGlobalUpdate,
    MessageKind::kAck,          MessageKind::kError,
    MessageKind::kDone,
};

std::string_view MessageKindName(MessageKind kind);
bool IsKnownKind(std::uint8_t kind);

struct Message {
  MessageKind kind = MessageKind::kDone;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Message&, const Message&) = default;
};

std::vector<std::uint8_t> EncodeMessage(
    const Message& msg, std::size_t max_payload = kDefaultMaxPayload);

enum class DecodeStatus { kOk, kNeedMoreData };

struct DecodeResult {
  DecodeStatus status = DecodeStatus::kNeedMoreData;
  Message message;
  std::size_t consumed = 0;  // bytes of the decoded frame
};

// Decodes the first frame in bytes. Returns kNeedMoreData while the frame is
// incomplete; throws a protocol error on an unknown version or kind and a
// frame error when payload_len exceeds max_payload.
DecodeResult DecodeMessage(std::span<const std::uint8_t> bytes,
                           std::size_t max_payload = kDefaultMaxPayload);

// Codes carried by ACK and ERROR.
enum class WireCode : std::uint8_t {
  kOk = 0,
  kDuplicateClient = 1,
  kArchMismatch = 2,
  kOutOfPhase = 3,
  kMalformed = 4,
  kAborted = 5,
  kConsistency = 6,
};

struct RegisterPayload {
  std::uint32_t client_id = 0;
  LabelMap label_map;
  ArchDescriptor arch;

  friend bool operator==(const RegisterPayload&,
                         const RegisterPayload&) = default;
};

struct TrainSummary {
  std::uint64_t num_samples = 0;  // n_i, size of the uploaded shard
  std::uint32_t epochs = 0;
  double final_loss = 0.0;
  double final_accuracy = 0.0;

  friend bool operator==(const TrainSummary&, const TrainSummary&) = default;
};

struct WeightsUploadPayload {
  MlpModel model;
  TrainSummary summary;

  friend bool operator==(const WeightsUploadPayload&,
                         const WeightsUploadPayload&) = default;
};

struct GlobalUpdatePayload {
  MlpModel global;
  LabelMap label_map;

  friend bool operator==(const GlobalUpdatePayload&,
                         const GlobalUpdatePayload&) = default;
};

struct ErrorPayload {
  WireCode code = WireCode::kAborted;
  std::string text;

  friend bool operator==(const ErrorPayload&, const ErrorPayload&) = default;
};

Message MakeRegister(const RegisterPayload& p);
Message MakeWeightsUpload(const WeightsUploadPayload& p);
Message MakeDataUpload(const DatasetShard& shard);
Message MakeGlobalUpdate(const GlobalUpdatePayload& p);
Message MakeAck(WireCode code = WireCode::kOk);
Message MakeError(WireCode code, std::string_view text);
Message MakeDone();

// Parsers throw a protocol error when the kind is wrong or the payload is
// malformed.
RegisterPayload ParseRegister(const Message& msg);
WeightsUploadPayload ParseWeightsUpload(const Message& msg);
DatasetShard ParseDataUpload(const Message& msg);
GlobalUpdatePayload ParseGlobalUpdate(const Message& msg);
WireCode ParseAck(const Message& msg);
ErrorPayload ParseError(const Message& msg);
void ParseDone(const Message& msg);

}  // namespace ecavg::proto

#endif  // ECAVG_PROTO_MESSAGE_H_
