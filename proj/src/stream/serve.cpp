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

#include <chrono>

#include "specleak/error.hpp"
#include "specleak/stream.hpp"

namespace specleak {

void SessionConfig::validate() const {
  if (model == nullptr) throw ConfigError("session needs a target model");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (sampler.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  engine.validate();
  policy.validate();
}

std::uint64_t SessionLog::observable_bytes() const {
  std::uint64_t n = 0;
  for (const auto& p : packets) n += p.size();
  return n;
}

std::uint64_t SessionLog::payload_bytes() const {
  std::uint64_t n = 0;
  for (const auto& p : packets) n += p.payload_len;
  return n;
}

SessionLog serve(const SessionConfig& cfg, PacketSink* sink) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  DecodeTrace trace = run_engine(cfg.engine, *cfg.model, cfg.prompt, cfg.max_tokens, cfg.sampler);

  SessionLog log;
  log.engine = std::string(engine_name(cfg.engine.kind));
  log.policy = cfg.policy.describe();
  for (const auto& it : trace) {
    log.token_counts.push_back(it.tokens.size());
    log.accepted.push_back(it.speculated_accepted);
  }

  auto frames = apply_mitigation(frame_session(trace, cfg.model->vocab(), cfg.separator), cfg.policy);
  log.iterations = std::move(trace);
  for (auto& f : frames) {
    if (cfg.clock == ClockMode::kWall) {
      const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
      f.packet.sent_at = dt.count();
    }
    if (sink != nullptr) {
      try {
        sink->send(f.packet.sent_at, encode_wire(f));
      } catch (const Error& e) {
        log.complete = false;
        throw SessionError(std::string("transport failure: ") + e.what(), std::move(log));
      }
    }
    log.transcript += f.payload;
    log.packets.push_back(f.packet);
  }
  if (sink != nullptr) sink->close();
  return log;
}

double overhead_ratio(std::span<const SessionLog> with_policy, std::span<const SessionLog> baseline) {
  std::uint64_t a = 0, b = 0;
  for (const auto& s : with_policy) a += s.observable_bytes();
  for (const auto& s : baseline) b += s.observable_bytes();
  return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
}

}  // namespace specleak
