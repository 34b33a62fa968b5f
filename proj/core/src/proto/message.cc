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
#include "ecavg/proto/message.h"

#include "ecavg/error.h"
#include "ecavg/proto/blob.h"
#include "ecavg/proto/wire.h"

namespace ecavg::proto {
namespace {

void ExpectKind(const Message& msg, MessageKind kind) {
  if (msg.kind != kind) {
    Fail(ErrorCode::kProtocol, "expected " + std::string(MessageKindName(kind)) +
                                   ", got " +
                                   std::string(MessageKindName(msg.kind)));
  }
}

// Re-raises payload decoding failures as protocol errors.
template <typename Fn>
auto AsProtocol(const Message& msg, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kProtocol) throw;
    Fail(ErrorCode::kProtocol, "malformed " +
                                   std::string(MessageKindName(msg.kind)) +
                                   " payload: " + e.what());
  }
}

}  // namespace

std::string_view MessageKindName(MessageKind kind) {
  switch (kind) {
    case MessageKind::kRegister: return "REGISTER";
    case MessageKind::kWeightsUpload: return "WEIGHTS_UPLOAD";
    case MessageKind::kDataUpload: return "DATA_UPLOAD";
    case MessageKind::kGlobalUpdate: return "GLOBAL_UPDATE";
    case MessageKind::kAck: return "ACK";
    case MessageKind::kError: return "ERROR";
    case MessageKind::kDone: return "DONE";
  }
  return "UNKNOWN";
}

bool IsKnownKind(std::uint8_t kind) { return kind >= 1 && kind <= 7; }

std::vector<std::uint8_t> EncodeMessage(const Message& msg,
                                        std::size_t max_payload) {
  if (msg.payload.size() > max_payload) {
    Fail(ErrorCode::kFrame, "payload of " + std::to_string(msg.payload.size()) +
                                " bytes exceeds the cap of " +
                                std::to_string(max_payload));
  }
  ByteWriter w;
  w.U8(kProtocolVersion);
  w.U8(static_cast<std::uint8_t>(msg.kind));
  w.Size32(msg.payload.size(), ErrorCode::kFrame);
  w.Bytes(msg.payload);
  return w.Take();
}

DecodeResult DecodeMessage(std::span<const std::uint8_t> bytes,
                           std::size_t max_payload) {
  DecodeResult result;
  if (bytes.size() < kFrameHeaderSize) return result;
  ByteReader r(bytes.first(kFrameHeaderSize), ErrorCode::kFrame);
  const std::uint8_t version = r.U8();
  const std::uint8_t kind = r.U8();
  const std::uint32_t len = r.U32();
  if (version != kProtocolVersion) {
    Fail(ErrorCode::kProtocol, "unsupported protocol version " +
                                   std::to_string(version));
  }
  if (!IsKnownKind(kind)) {
    Fail(ErrorCode::kProtocol, "unknown message kind " + std::to_string(kind));
  }
  if (len > max_payload) {
    Fail(ErrorCode::kFrame, "payload_len " + std::to_string(len) +
                                " exceeds the cap of " +
                                std::to_string(max_payload));
  }
  if (bytes.size() < kFrameHeaderSize + len) return result;
  result.status = DecodeStatus::kOk;
  result.message.kind = static_cast<MessageKind>(kind);
  result.message.payload.assign(bytes.begin() + kFrameHeaderSize,
                                bytes.begin() + kFrameHeaderSize + len);
  result.consumed = kFrameHeaderSize + len;
  return result;
}

Message MakeRegister(const RegisterPayload& p) {
  ByteWriter w;
  w.U32(p.client_id);
  WriteLabelMap(w, p.label_map);
  WriteArch(w, p.arch);
  return {MessageKind::kRegister, w.Take()};
}

Message MakeWeightsUpload(const WeightsUploadPayload& p) {
  ByteWriter w;
  w.U64(p.summary.num_samples);
  w.U32(p.summary.epochs);
  w.F64(p.summary.final_loss);
  w.F64(p.summary.final_accuracy);
  w.Bytes(EncodeModel(p.model));
  return {MessageKind::kWeightsUpload, w.Take()};
}

Message MakeDataUpload(const DatasetShard& shard) {
  return {MessageKind::kDataUpload, EncodeShard(shard)};
}

Message MakeGlobalUpdate(const GlobalUpdatePayload& p) {
  ByteWriter w;
  WriteLabelMap(w, p.label_map);
  w.Bytes(EncodeModel(p.global));
  return {MessageKind::kGlobalUpdate, w.Take()};
}

Message MakeAck(WireCode code) {
  return {MessageKind::kAck, {static_cast<std::uint8_t>(code)}};
}

Message MakeError(WireCode code, std::string_view text) {
  Message msg{MessageKind::kError, {static_cast<std::uint8_t>(code)}};
  msg.payload.insert(msg.payload.end(), text.begin(), text.end());
  return msg;
}

Message MakeDone() { return {MessageKind::kDone, {}}; }

RegisterPayload ParseRegister(const Message& msg) {
  ExpectKind(msg, MessageKind::kRegister);
  return AsProtocol(msg, [&] {
    ByteReader r(msg.payload, ErrorCode::kProtocol);
    RegisterPayload p;
    p.client_id = r.U32();
    p.label_map = ReadLabelMap(r);
    p.arch = ReadArch(r);
    r.ExpectEnd("REGISTER");
    return p;
  });
}

WeightsUploadPayload ParseWeightsUpload(const Message& msg) {
  ExpectKind(msg, MessageKind::kWeightsUpload);
  return AsProtocol(msg, [&] {
    ByteReader r(msg.payload, ErrorCode::kProtocol);
    WeightsUploadPayload p;
    p.summary.num_samples = r.U64();
    p.summary.epochs = r.U32();
    p.summary.final_loss = r.F64();
    p.summary.final_accuracy = r.F64();
    p.model = DecodeModel(r.Rest());
    return p;
  });
}

DatasetShard ParseDataUpload(const Message& msg) {
  ExpectKind(msg, MessageKind::kDataUpload);
  return AsProtocol(msg, [&] { return DecodeShard(msg.payload); });
}

GlobalUpdatePayload ParseGlobalUpdate(const Message& msg) {
  ExpectKind(msg, MessageKind::kGlobalUpdate);
  return AsProtocol(msg, [&] {
    ByteReader r(msg.payload, ErrorCode::kProtocol);
    GlobalUpdatePayload p;
    p.label_map = ReadLabelMap(r);
    p.global = DecodeModel(r.Rest());
    return p;
  });
}

WireCode ParseAck(const Message& msg) {
  ExpectKind(msg, MessageKind::kAck);
  return AsProtocol(msg, [&] {
    ByteReader r(msg.payload, ErrorCode::kProtocol);
    const std::uint8_t code = r.U8();
    r.ExpectEnd("ACK");
    return static_cast<WireCode>(code);
  });
}

ErrorPayload ParseError(const Message& msg) {
  ExpectKind(msg, MessageKind::kError);
  return AsProtocol(msg, [&] {
    ByteReader r(msg.payload, ErrorCode::kProtocol);
    ErrorPayload p;
    p.code = static_cast<WireCode>(r.U8());
    auto rest = r.Rest();
    p.text.assign(rest.begin(), rest.end());
    return p;
  });
}

void ParseDone(const Message& msg) {
  ExpectKind(msg, MessageKind::kDone);
  if (!msg.payload.empty()) {
    Fail(ErrorCode::kProtocol, "DONE carries a payload");
  }
}

}  // namespace ecavg::proto
