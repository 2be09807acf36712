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

#include <charconv>

#include "specleak/error.hpp"
#include "specleak/stream.hpp"

namespace specleak {

Frame frame_iteration(const DecodeIteration& iter, const Vocab& vocab, std::string_view separator,
                      bool leading_separator) {
  Frame f;
  if (leading_separator) f.payload = separator;
  f.payload += detokenize(iter.tokens, vocab, separator);
  f.packet.seq = iter.index;
  f.packet.payload_len = static_cast<std::uint32_t>(f.payload.size());
  f.packet.first_iteration = iter.index;
  f.packet.iteration_count = 1;
  f.packet.sent_at = static_cast<double>(iter.index + 1);
  return f;
}

std::vector<Frame> frame_session(std::span<const DecodeIteration> iterations, const Vocab& vocab,
                                 std::string_view separator) {
  std::vector<Frame> out;
  out.reserve(iterations.size());
  for (std::size_t i = 0; i < iterations.size(); ++i) {
    out.push_back(frame_iteration(iterations[i], vocab, separator, i > 0));
  }
  return out;
}

MitigationPolicy MitigationPolicy::constant(std::uint32_t size) {
  MitigationPolicy p;
  p.pad = Pad::kConstant;
  p.target_size = size;
  return p;
}

MitigationPolicy MitigationPolicy::variable(std::uint32_t d, std::uint64_t seed) {
  MitigationPolicy p;
  p.pad = Pad::kVariable;
  p.max_pad = d;
  p.seed = seed;
  return p;
}

MitigationPolicy MitigationPolicy::aggregated(std::size_t k) {
  MitigationPolicy p;
  p.aggregate = k;
  return p;
}

void MitigationPolicy::validate() const {
  if (aggregate < 1) throw ConfigError("aggregation granularity must be >= 1");
  if (pad == Pad::kConstant && target_size == 0) throw ConfigError("constant padding size must be > 0");
}

namespace {

std::uint64_t parse_number(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("bad " + std::string(what) + " '" + std::string(s) + "' in mitigation policy");
  }
  return v;
}

}  // namespace

MitigationPolicy MitigationPolicy::parse(std::string_view text) {
  MitigationPolicy p;
  if (text.empty() || text == "none") return p;
  bool have_pad = false;
  bool have_agg = false;
  while (!text.empty()) {
    const auto plus = text.find('+');
    const std::string_view part = text.substr(0, plus);
    text = plus == std::string_view::npos ? std::string_view{} : text.substr(plus + 1);
    const auto colon = part.find(':');
    const std::string_view kind = part.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : part.substr(colon + 1);
    if (kind == "aggregate") {
      if (have_agg || have_pad) throw ConfigError("aggregation must come first and at most once");
      have_agg = true;
      p.aggregate = parse_number(arg, "aggregation k");
    } else if (kind == "constant" || kind == "variable") {
      if (have_pad) throw ConfigError("at most one padding variant per policy");
      have_pad = true;
      const auto v = parse_number(arg, "padding size");
      if (v > UINT32_MAX) throw ConfigError("padding size too large");
      if (kind == "constant") {
        p.pad = Pad::kConstant;
        p.target_size = static_cast<std::uint32_t>(v);
      } else {
        p.pad = Pad::kVariable;
        p.max_pad = static_cast<std::uint32_t>(v);
      }
    } else if (kind != "none") {
      throw ConfigError("unknown mitigation '" + std::string(part) + "'");
    }
  }
  p.validate();
  return p;
}

std::string MitigationPolicy::describe() const {
  std::string out;
  if (aggregate != 1) out = "aggregate:" + std::to_string(aggregate);
  std::string pad_part;
  if (pad == Pad::kConstant) pad_part = "constant:" + std::to_string(target_size);
  if (pad == Pad::kVariable) pad_part = "variable:" + std::to_string(max_pad);
  if (!pad_part.empty()) out += (out.empty() ? "" : "+") + pad_part;
  return out.empty() ? "none" : out;
}

std::vector<Frame> apply_mitigation(std::vector<Frame> frames, const MitigationPolicy& policy) {
  policy.validate();
  if (policy.aggregate > 1) {
    std::vector<Frame> merged;
    for (std::size_t i = 0; i < frames.size(); i += policy.aggregate) {
      Frame m = std::move(frames[i]);
      const std::size_t end = std::min(frames.size(), i + policy.aggregate);
      for (std::size_t j = i + 1; j < end; ++j) {
        m.payload += frames[j].payload;
        m.packet.iteration_count += frames[j].packet.iteration_count;
        m.packet.sent_at = frames[j].packet.sent_at;
      }
      m.packet.payload_len = static_cast<std::uint32_t>(m.payload.size());
      merged.push_back(std::move(m));
    }
    frames = std::move(merged);
  }
  for (std::size_t i = 0; i < frames.size(); ++i) frames[i].packet.seq = i;

  switch (policy.pad) {
    case MitigationPolicy::Pad::kNone:
      break;
    case MitigationPolicy::Pad::kConstant:
      for (auto& f : frames) {
        if (f.packet.payload_len > policy.target_size) {
          throw ConfigError("packet " + std::to_string(f.packet.seq) + " carries " +
                            std::to_string(f.packet.payload_len) + " payload bytes, more than the constant pad size " +
                            std::to_string(policy.target_size));
        }
        f.packet.pad_len = policy.target_size - f.packet.payload_len;
      }
      break;
    case MitigationPolicy::Pad::kVariable: {
      // Drawn per packet from the policy seed only, never from the content.
      CounterRng rng(policy.seed);
      for (auto& f : frames) f.packet.pad_len = static_cast<std::uint32_t>(rng.below(policy.max_pad + 1ULL));
      break;
    }
  }
  return frames;
}

std::string encode_wire(const Frame& frame) {
  const std::uint32_t len = frame.packet.size();
  std::string out;
  out.reserve(4 + len);
  out.push_back(static_cast<char>((len >> 24) & 0xFF));
  out.push_back(static_cast<char>((len >> 16) & 0xFF));
  out.push_back(static_cast<char>((len >> 8) & 0xFF));
  out.push_back(static_cast<char>(len & 0xFF));
  out += frame.payload;
  out.append(frame.packet.pad_len, '\0');
  return out;
}

}  // namespace specleak
