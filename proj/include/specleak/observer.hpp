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

// The network adversary's sensor: packet (time, size) traces and their
// fixed-length feature vectors.

#include <iosfwd>
#include <string>
#include <vector>

#include "specleak/stream.hpp"

namespace specleak {

struct TraceSample {
  double inter_arrival = 0.0;
  std::uint32_t size = 0;
};

struct Trace {
  std::string id;
  std::string label;  // empty when unknown
  std::vector<TraceSample> samples;
  bool complete = true;

  std::vector<std::uint32_t> sizes() const;
};

// Reads the tap to end of stream. Zero-length packets are not observable
// events and are skipped.
Trace capture(PacketTap& tap);

// What capture() would see for a session, computed from the packet log's
// observable fields only. Used when sessions run without a transport.
Trace observe(const SessionLog& log);

// Sizes zero-padded or truncated to length L.
std::vector<double> featurize(const Trace& trace, std::size_t length);

struct VocabStats {
  double mean_token_bytes = 1.0;  // including one separator
};

// Token-frequency-weighted mean bytes per token over corpus lines.
VocabStats vocab_stats(std::span<const std::string> corpus_lines, std::string_view separator = " ");

struct TokenCountEstimate {
  std::vector<std::size_t> counts;
  bool reliable = true;  // false once padding or aggregation was applied
};

TokenCountEstimate estimate_token_counts(const Trace& trace, const VocabStats& stats, bool mitigated);

// CSV interchange: trace_id,label,seq,inter_arrival,size
void write_traces_csv(std::ostream& out, std::span<const Trace> traces);
void write_traces_csv_file(const std::string& path, std::span<const Trace> traces);
std::vector<Trace> read_traces_csv(std::istream& in, const std::string& source_name = "<stream>");
std::vector<Trace> read_traces_csv_file(const std::string& path);

}  // namespace specleak
