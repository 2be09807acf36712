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

#pragma once

// Token streaming channel. Each decode iteration becomes one packet whose only
// observable properties are its length and send time.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "specleak/error.hpp"
#include "specleak/specdec.hpp"

namespace specleak {

struct Packet {
  std::size_t seq = 0;
  std::uint32_t payload_len = 0;
  std::uint32_t pad_len = 0;
  double sent_at = 0.0;
  std::size_t first_iteration = 0;  // iterations [first, first + iteration_count)
  std::size_t iteration_count = 1;

  std::uint32_t size() const noexcept { return payload_len + pad_len; }
};

// A packet before mitigation, still carrying its text.
struct Frame {
  Packet packet;
  std::string payload;
};

// `leading_separator` prefixes the separator so consecutive payloads
// concatenate to the transcript; it is false only for the session's first
// iteration.
Frame frame_iteration(const DecodeIteration& iter, const Vocab& vocab, std::string_view separator = " ",
                      bool leading_separator = false);

std::vector<Frame> frame_session(std::span<const DecodeIteration> iterations, const Vocab& vocab,
                                 std::string_view separator = " ");

struct MitigationPolicy {
  enum class Pad { kNone, kConstant, kVariable };

  std::size_t aggregate = 1;  // iterations per packet; 1 = off
  Pad pad = Pad::kNone;
  std::uint32_t target_size = 1024;  // constant padding
  std::uint32_t max_pad = 0;         // D for variable padding
  std::uint64_t seed = 0;            // variable padding draws

  static MitigationPolicy none() { return {}; }
  static MitigationPolicy constant(std::uint32_t size);
  static MitigationPolicy variable(std::uint32_t d, std::uint64_t seed = 0);
  static MitigationPolicy aggregated(std::size_t k);

  bool is_none() const noexcept { return aggregate == 1 && pad == Pad::kNone; }
  void validate() const;

  // "none", "constant:1024", "variable:6", "aggregate:3", or "aggregate:3+variable:6".
  static MitigationPolicy parse(std::string_view text);
  std::string describe() const;
};

// Aggregation first (merging payloads of `aggregate` consecutive frames),
// then padding. Text content is never changed. ConstantPad throws
// ConfigError naming the first packet whose payload exceeds the target.
std::vector<Frame> apply_mitigation(std::vector<Frame> frames, const MitigationPolicy& policy);

// ---------------------------------------------------------------------------
// Transports. Wire format per packet: 4-byte big-endian length L, then L
// bytes (payload followed by zero padding).

std::string encode_wire(const Frame& frame);

struct Observation {
  double time = 0.0;
  std::uint32_t length = 0;
};

// Sender side.
class PacketSink {
 public:
  virtual ~PacketSink() = default;
  virtual void send(double time, const std::string& wire) = 0;
  virtual void close() = 0;
};

// Receiver side as seen by the network adversary: nothing but (time, length).
class PacketTap {
 public:
  virtual ~PacketTap() = default;
  // nullopt at end of stream. Sets truncated() if the stream ended inside a
  // packet.
  virtual std::optional<Observation> next() = 0;
  virtual bool truncated() const = 0;
};

// In-process queue; send and next may run on different threads.
class QueueChannel : public PacketSink, public PacketTap {
 public:
  void send(double time, const std::string& wire) override;
  void close() override;
  std::optional<Observation> next() override;
  bool truncated() const override { return truncated_; }

 private:
  struct Chunk {
    double time;
    std::string bytes;
  };
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Chunk> chunks_;
  std::string pending_;
  double pending_time_ = 0.0;
  bool closed_ = false;
  bool truncated_ = false;
};

// TCP loopback. The listener accepts one connection; the client side is the
// tap. Arrival times are wall-clock seconds since the tap connected.
class TcpListener {
 public:
  // port 0 picks an ephemeral port.
  explicit TcpListener(std::uint16_t port = 0, const std::string& host = "127.0.0.1");
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  std::unique_ptr<PacketSink> accept();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

std::unique_ptr<PacketTap> tcp_connect(const std::string& host, std::uint16_t port);

// ---------------------------------------------------------------------------

enum class ClockMode { kSimulated, kWall };

struct SessionConfig {
  const NGramModel* model = nullptr;
  EngineSpec engine;
  TokenSeq prompt;
  std::size_t max_tokens = 64;
  SamplerConfig sampler;
  MitigationPolicy policy;
  std::string separator = " ";
  ClockMode clock = ClockMode::kSimulated;
  void validate() const;
};

struct SessionLog {
  std::string engine;
  std::string policy;
  std::vector<std::size_t> token_counts;  // per iteration
  std::vector<std::size_t> accepted;      // per iteration
  DecodeTrace iterations;                 // what the streaming client receives
  std::vector<Packet> packets;
  std::string transcript;
  bool complete = true;

  std::uint64_t observable_bytes() const;
  std::uint64_t payload_bytes() const;
};

class SessionError : public Error {
 public:
  SessionError(const std::string& what, SessionLog partial) : Error(what), partial_(std::move(partial)) {}
  const SessionLog& partial() const noexcept { return partial_; }

 private:
  SessionLog partial_;
};

// Runs one session and streams its packets into `sink` (if any). Simulated
// clock: iteration i completes at tick i + 1 and a packet is sent when its
// last iteration completes.
SessionLog serve(const SessionConfig& cfg, PacketSink* sink = nullptr);

// Observable-bytes ratio between `with_policy` and the unmitigated sessions.
double overhead_ratio(std::span<const SessionLog> with_policy, std::span<const SessionLog> baseline);

}  // namespace specleak
