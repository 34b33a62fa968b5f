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
#ifndef ECAVG_PROTO_TRANSPORT_H_
#define ECAVG_PROTO_TRANSPORT_H_

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ecavg/proto/message.h"

namespace ecavg::proto {

// Reliable ordered byte stream.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void WriteAll(std::span<const std::uint8_t> bytes) = 0;
  // Blocks for at least one byte; returns 0 at end of stream.
  virtual std::size_t ReadSome(std::span<std::uint8_t> out) = 0;
  // Unblocks pending reads on any thread; later I/O fails.
  virtual void Shutdown() = 0;
};

/// Message-level connection. Frames are encoded and decoded with the wire
/// codec on top of a ByteStream, so every transport shares one format.
class Connection {
 public:
  explicit Connection(std::unique_ptr<ByteStream> stream,
                      std::size_t max_payload = kDefaultMaxPayload);

  void Send(const Message& msg);
  // Throws a transport error when the peer closes mid-session.
  Message Receive();
  void Close();

 private:
  std::unique_ptr<ByteStream> stream_;
  std::size_t max_payload_;
  std::vector<std::uint8_t> buffer_;
};

class Acceptor {
 public:
  virtual ~Acceptor() = default;
  // Throws a transport error on timeout.
  virtual std::unique_ptr<Connection> Accept(
      std::chrono::milliseconds timeout) = 0;
  virtual std::size_t max_payload() const = 0;
};

/// In-memory network for tests and in-process runs over the real codec.
class LoopbackNetwork {
 public:
  explicit LoopbackNetwork(std::size_t max_payload = kDefaultMaxPayload);
  ~LoopbackNetwork();

  LoopbackNetwork(const LoopbackNetwork&) = delete;
  LoopbackNetwork& operator=(const LoopbackNetwork&) = delete;

  Acceptor& acceptor();
  std::unique_ptr<Connection> Connect();

 private:
  struct State;
  class LoopbackAcceptor;
  std::shared_ptr<State> state_;
  std::unique_ptr<LoopbackAcceptor> acceptor_;
};

// A connected pair of in-memory streams.
std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>>
MakeStreamPair();

class TcpListener : public Acceptor {
 public:
  // port 0 picks an ephemeral port; see port().
  TcpListener(const std::string& host, std::uint16_t port,
              std::size_t max_payload = kDefaultMaxPayload);
  ~TcpListener() override;

  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::unique_ptr<Connection> Accept(
      std::chrono::milliseconds timeout) override;
  std::size_t max_payload() const override { return max_payload_; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
  std::size_t max_payload_;
};

struct ConnectOptions {
  int retries = 20;
  std::chrono::milliseconds backoff{100};
  std::size_t max_payload = kDefaultMaxPayload;
};

// Retries refused connections; throws a transport error after the last try.
std::unique_ptr<Connection> TcpConnect(const std::string& host,
                                       std::uint16_t port,
                                       const ConnectOptions& options = {});

}  // namespace ecavg::proto

#endif  // ECAVG_PROTO_TRANSPORT_H_
