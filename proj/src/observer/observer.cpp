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

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "specleak/error.hpp"
#include "specleak/kernels.hpp"
#include "specleak/observer.hpp"

namespace specleak {

std::vector<std::uint32_t> Trace::sizes() const {
  std::vector<std::uint32_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.size);
  return out;
}

Trace capture(PacketTap& tap) {
  Trace t;
  double last = 0.0;
  while (auto obs = tap.next()) {
    if (obs->length == 0) continue;
    t.samples.push_back({obs->time - last, obs->length});
    last = obs->time;
  }
  t.complete = !tap.truncated();
  return t;
}

Trace observe(const SessionLog& log) {
  Trace t;
  double last = 0.0;
  for (const auto& p : log.packets) {
    if (p.size() == 0) continue;
    t.samples.push_back({p.sent_at - last, p.size()});
    last = p.sent_at;
  }
  t.complete = log.complete;
  return t;
}

std::vector<double> featurize(const Trace& trace, std::size_t length) {
  if (length < 1) throw ConfigError("feature length must be >= 1");
  const auto sizes = trace.sizes();
  std::vector<double> out(length);
  kernels::widen_u32(sizes, out);
  return out;
}

VocabStats vocab_stats(std::span<const std::string> corpus_lines, std::string_view separator) {
  std::uint64_t bytes = 0, tokens = 0;
  for (const auto& line : corpus_lines) {
    for (auto w : split_words(line)) {
      bytes += w.size() + separator.size();
      ++tokens;
    }
  }
  if (tokens == 0) throw ConfigError("cannot compute token statistics from an empty corpus");
  return {static_cast<double>(bytes) / static_cast<double>(tokens)};
}

TokenCountEstimate estimate_token_counts(const Trace& trace, const VocabStats& stats, bool mitigated) {
  if (!(stats.mean_token_bytes > 0.0)) throw ConfigError("mean token size must be > 0");
  TokenCountEstimate est;
  est.reliable = !mitigated && trace.complete;
  for (const auto& s : trace.samples) {
    est.counts.push_back(static_cast<std::size_t>(std::llround(s.size / stats.mean_token_bytes)));
  }
  return est;
}

namespace {

// Labels and ids are written raw; they must not contain commas, quotes or
// newlines.
void check_field(const std::string& s, const char* what) {
  if (s.find_first_of(",\"\r\n") != std::string::npos) {
    throw ConfigError(std::string("trace ") + what + " '" + s + "' contains a CSV metacharacter");
  }
}

}  // namespace

void write_traces_csv(std::ostream& out, std::span<const Trace> traces) {
  out << "trace_id,label,seq,inter_arrival,size\n";
  out << std::setprecision(17);
  for (const auto& t : traces) {
    check_field(t.id, "id");
    check_field(t.label, "label");
    for (std::size_t i = 0; i < t.samples.size(); ++i) {
      out << t.id << ',' << t.label << ',' << i << ',' << t.samples[i].inter_arrival << ',' << t.samples[i].size
          << '\n';
    }
  }
}

void write_traces_csv_file(const std::string& path, std::span<const Trace> traces) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_traces_csv(out, traces);
  if (!out) throw IoError("error while writing " + path);
}

std::vector<Trace> read_traces_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError(source_name, 1, "empty trace file");
  ++lineno;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "trace_id,label,seq,inter_arrival,size") throw ParseError(source_name, lineno, "unexpected header");

  std::vector<Trace> traces;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw ParseError(source_name, lineno, "expected 5 fields, got " + std::to_string(f.size()));
    std::size_t seq = 0;
    double dt = 0.0;
    unsigned long size = 0;
    try {
      std::size_t used = 0;
      seq = std::stoull(f[2], &used);
      if (used != f[2].size()) throw std::invalid_argument("seq");
      dt = std::stod(f[3], &used);
      if (used != f[3].size()) throw std::invalid_argument("inter_arrival");
      size = std::stoul(f[4], &used);
      if (used != f[4].size()) throw std::invalid_argument("size");
    } catch (const std::logic_error&) {
      throw ParseError(source_name, lineno, "malformed number");
    }
    if (size == 0 || size > UINT32_MAX) throw ParseError(source_name, lineno, "size must be in [1, 2^32)");
    auto [it, inserted] = index.try_emplace(f[0], traces.size());
    if (inserted) {
      traces.push_back({f[0], f[1], {}, true});
    }
    Trace& t = traces[it->second];
    if (t.label != f[1]) throw ParseError(source_name, lineno, "label changes within trace " + f[0]);
    if (seq != t.samples.size()) throw ParseError(source_name, lineno, "out-of-order seq in trace " + f[0]);
    t.samples.push_back({dt, static_cast<std::uint32_t>(size)});
  }
  return traces;
}

std::vector<Trace> read_traces_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_traces_csv(in, path);
}

}  // namespace specleak
