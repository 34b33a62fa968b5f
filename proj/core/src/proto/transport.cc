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
#include "ecavg/proto/transport.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <condition_variable>
#include <cstring>
#include <deque>
#include <mutex>
#include <thread>

#include "ecavg/error.h"

namespace ecavg::proto {
namespace {

[[noreturn]] void FailErrno(const std::string& what) {
  Fail(ErrorCode::kTransport, what + ": " + std::strerror(errno));
}

// One direction of an in-memory stream.
struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::uint8_t> bytes;
  bool closed = false;
};

class PipeStream : public ByteStream {
 public:
  PipeStream(std::shared_ptr<Pipe> in, std::shared_ptr<Pipe> out)
      : in_(std::move(in)), out_(std::move(out)) {}
  ~PipeStream() override { Shutdown(); }

  void WriteAll(std::span<const std::uint8_t> bytes) override {
    std::lock_guard lock(out_->mu);
    if (out_->closed) Fail(ErrorCode::kTransport, "write on a closed stream");
    out_->bytes.insert(out_->bytes.end(), bytes.begin(), bytes.end());
    out_->cv.notify_all();
  }

  std::size_t ReadSome(std::span<std::uint8_t> out) override {
    std::unique_lock lock(in_->mu);
    in_->cv.wait(lock, [&] { return !in_->bytes.empty() || in_->closed; });
    const std::size_t n = std::min(out.size(), in_->bytes.size());
    std::copy_n(in_->bytes.begin(), n, out.begin());
    in_->bytes.erase(in_->bytes.begin(), in_->bytes.begin() + n);
    return n;
  }

  void Shutdown() override {
    for (Pipe* p : {in_.get(), out_.get()}) {
      std::lock_guard lock(p->mu);
      p->closed = true;
      p->cv.notify_all();
    }
  }

 private:
  std::shared_ptr<Pipe> in_;
  std::shared_ptr<Pipe> out_;
};

class SocketStream : public ByteStream {
 public:
  explicit SocketStream(int fd) : fd_(fd) {}
  ~SocketStream() override {
    Shutdown();
    ::close(fd_);
  }

  void WriteAll(std::span<const std::uint8_t> bytes) override {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent,
                               MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        FailErrno("send");
      }
      sent += static_cast<std::size_t>(n);
    }
  }

  std::size_t ReadSome(std::span<std::uint8_t> out) override {
    for (;;) {
      const ssize_t n = ::recv(fd_, out.data(), out.size(), 0);
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno == EINTR) continue;
      if (shut_.load()) return 0;
      FailErrno("recv");
    }
  }

  void Shutdown() override {
    if (!shut_.exchange(true)) ::shutdown(fd_, SHUT_RDWR);
  }

 private:
  int fd_;
  std::atomic<bool> shut_{false};
};

constexpr std::size_t kReadChunk = 1 << 16;

}  // namespace

Connection::Connection(std::unique_ptr<ByteStream> stream,
                       std::size_t max_payload)
    : stream_(std::move(stream)), max_payload_(max_payload) {}

void Connection::Send(const Message& msg) {
  stream_->WriteAll(EncodeMessage(msg, max_payload_));
}

Message Connection::Receive() {
  std::vector<std::uint8_t> chunk(kReadChunk);
  for (;;) {
    DecodeResult r = DecodeMessage(buffer_, max_payload_);
    if (r.status == DecodeStatus::kOk) {
      buffer_.erase(buffer_.begin(),
                    buffer_.begin() + static_cast<std::ptrdiff_t>(r.consumed));
      return std::move(r.message);
    }
    const std::size_t n = stream_->ReadSome(chunk);
    if (n == 0) {
      Fail(ErrorCode::kTransport, buffer_.empty()
                                      ? "peer closed the connection"
                                      : "peer closed the connection mid-frame");
    }
    buffer_.insert(buffer_.end(), chunk.begin(), chunk.begin() + n);
  }
}

void Connection::Close() { stream_->Shutdown(); }

std::pair<std::unique_ptr<ByteStream>, std::unique_ptr<ByteStream>>
MakeStreamPair() {
  auto a_to_b = std::make_shared<Pipe>();
  auto b_to_a = std::make_shared<Pipe>();
  return {std::make_unique<PipeStream>(b_to_a, a_to_b),
          std::make_unique<PipeStream>(a_to_b, b_to_a)};
}

struct LoopbackNetwork::State {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::unique_ptr<ByteStream>> pending;
  bool closed = false;
  std::size_t max_payload;
};

class LoopbackNetwork::LoopbackAcceptor : public Acceptor {
 public:
  explicit LoopbackAcceptor(std::shared_ptr<State> state)
      : state_(std::move(state)) {}

  std::unique_ptr<Connection> Accept(
      std::chrono::milliseconds timeout) override {
    std::unique_lock lock(state_->mu);
    if (!state_->cv.wait_for(lock, timeout, [&] {
          return !state_->pending.empty() || state_->closed;
        }) ||
        state_->pending.empty()) {
      Fail(ErrorCode::kTransport, "timed out waiting for a loopback client");
    }
    auto stream = std::move(state_->pending.front());
    state_->pending.pop_front();
    return std::make_unique<Connection>(std::move(stream),
                                        state_->max_payload);
  }

  std::size_t max_payload() const override { return state_->max_payload; }

 private:
  std::shared_ptr<State> state_;
};

LoopbackNetwork::LoopbackNetwork(std::size_t max_payload)
    : state_(std::make_shared<State>()),
      acceptor_(std::make_unique<LoopbackAcceptor>(state_)) {
  state_->max_payload = max_payload;
}

LoopbackNetwork::~LoopbackNetwork() {
  std::lock_guard lock(state_->mu);
  state_->closed = true;
  state_->cv.notify_all();
}

Acceptor& LoopbackNetwork::acceptor() { return *acceptor_; }

std::unique_ptr<Connection> LoopbackNetwork::Connect() {
  auto [client, server] = MakeStreamPair();
  {
    std::lock_guard lock(state_->mu);
    if (state_->closed) Fail(ErrorCode::kTransport, "loopback network closed");
    state_->pending.push_back(std::move(server));
    state_->cv.notify_all();
  }
  return std::make_unique<Connection>(std::move(client), state_->max_payload);
}

TcpListener::TcpListener(const std::string& host, std::uint16_t port,
                         std::size_t max_payload)
    : max_payload_(max_payload) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) FailErrno("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd_);
    Fail(ErrorCode::kTransport, "not an IPv4 address: " + host);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) < 0 ||
      ::listen(fd_, 64) < 0) {
    const int saved = errno;
    ::close(fd_);
    errno = saved;
    FailErrno("bind/listen on " + host + ":" + std::to_string(port));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<Connection> TcpListener::Accept(
    std::chrono::milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  int ready;
  do {
    ready = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  } while (ready < 0 && errno == EINTR);
  if (ready < 0) FailErrno("poll");
  if (ready == 0) Fail(ErrorCode::kTransport, "timed out waiting for a client");
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) FailErrno("accept");
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return std::make_unique<Connection>(std::make_unique<SocketStream>(fd),
                                      max_payload_);
}

std::unique_ptr<Connection> TcpConnect(const std::string& host,
                                       std::uint16_t port,
                                       const ConnectOptions& options) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res);
      rc != 0) {
    Fail(ErrorCode::kTransport,
         "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  std::unique_ptr<addrinfo, decltype(&::freeaddrinfo)> guard(res,
                                                             ::freeaddrinfo);
  std::string last_error;
  for (int attempt = 0; attempt <= options.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options.backoff);
    const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) FailErrno("socket");
    if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
      return std::make_unique<Connection>(std::make_unique<SocketStream>(fd),
                                          options.max_payload);
    }
    last_error = std::strerror(errno);
    ::close(fd);
  }
  Fail(ErrorCode::kTransport, "cannot connect to " + host + ":" + service +
                                  " after " +
                                  std::to_string(options.retries + 1) +
                                  " attempts: " + last_error);
}

}  // namespace ecavg::proto
