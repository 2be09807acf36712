// Copyright 2026 The specleak Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "specleak/error.hpp"
#include "specleak/stream.hpp"

namespace specleak {

namespace {

std::uint32_t read_be32(const std::string& s) {
  auto b = [&](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])); };
  return (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
}

// Pulls one complete packet off the front of `buf`, if present.
std::optional<std::uint32_t> take_packet(std::string& buf) {
  if (buf.size() < 4) return std::nullopt;
  const std::uint32_t len = read_be32(buf);
  if (buf.size() < 4 + static_cast<std::size_t>(len)) return std::nullopt;
  buf.erase(0, 4 + static_cast<std::size_t>(len));
  return len;
}

[[noreturn]] void throw_errno(const std::string& what) { throw IoError(what + ": " + std::strerror(errno)); }

class FdSink : public PacketSink {
 public:
  explicit FdSink(int fd) : fd_(fd) {}
  ~FdSink() override { close(); }

  void send(double, const std::string& wire) override {
    std::size_t off = 0;
    while (off < wire.size()) {
      const ssize_t n = ::send(fd_, wire.data() + off, wire.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("tcp send");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_WR);
      ::close(fd_);
      fd_ = -1;
    }
  }

 private:
  int fd_;
};

class FdTap : public PacketTap {
 public:
  explicit FdTap(int fd) : fd_(fd), start_(std::chrono::steady_clock::now()) {}
  ~FdTap() override { ::close(fd_); }

  std::optional<Observation> next() override {
    for (;;) {
      if (auto len = take_packet(buf_)) {
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
        return Observation{dt.count(), *len};
      }
      if (eof_) {
        truncated_ = !buf_.empty();
        return std::nullopt;
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("tcp recv");
      }
      if (n == 0) {
        eof_ = true;
        continue;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  bool truncated() const override { return truncated_; }

 private:
  int fd_;
  std::chrono::steady_clock::time_point start_;
  std::string buf_;
  bool eof_ = false;
  bool truncated_ = false;
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw ConfigError("bad IPv4 address '" + host + "'");
  return addr;
}

}  // namespace

void QueueChannel::send(double time, const std::string& wire) {
  {
    std::lock_guard lock(mu_);
    if (closed_) throw IoError("send on a closed queue channel");
    chunks_.push_back({time, wire});
  }
  cv_.notify_one();
}

void QueueChannel::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

std::optional<Observation> QueueChannel::next() {
  std::unique_lock lock(mu_);
  for (;;) {
    if (auto len = take_packet(pending_)) return Observation{pending_time_, *len};
    cv_.wait(lock, [&] { return !chunks_.empty() || closed_; });
    if (chunks_.empty()) {
      truncated_ = !pending_.empty();
      return std::nullopt;
    }
    pending_ += chunks_.front().bytes;
    pending_time_ = chunks_.front().time;
    chunks_.pop_front();
  }
}

TcpListener::TcpListener(std::uint16_t port, const std::string& host) {
  fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd_ < 0) throw_errno("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr = make_addr(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(fd_);
    throw_errno("bind " + host + ":" + std::to_string(port));
  }
  if (::listen(fd_, 1) < 0) {
    ::close(fd_);
    throw_errno("listen");
  }
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

std::unique_ptr<PacketSink> TcpListener::accept() {
  int c;
  do {
    c = ::accept(fd_, nullptr, nullptr);
  } while (c < 0 && errno == EINTR);
  if (c < 0) throw_errno("accept");
  const int one = 1;
  ::setsockopt(c, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return std::make_unique<FdSink>(c);
}

std::unique_ptr<PacketTap> tcp_connect(const std::string& host, std::uint16_t port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw_errno("socket");
  sockaddr_in addr = make_addr(host, port);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0) {
    ::close(fd);
    throw_errno("connect " + host + ":" + std::to_string(port));
  }
  return std::make_unique<FdTap>(fd);
}

}  // namespace specleak
