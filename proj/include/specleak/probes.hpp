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

// Recovering the lookahead engine's N and G from what a streaming client sees:
// the tokens of each iteration.

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "specleak/stream.hpp"

namespace specleak {

// Runs one session for `prompt` and returns the token blocks as streamed.
using StreamClient = std::function<std::vector<TokenSeq>(const TokenSeq& prompt, std::size_t max_tokens)>;

StreamClient make_client(const NGramModel& model, EngineSpec engine, SamplerConfig sampler);

struct ProbeResult {
  bool conclusive = false;
  int recovered = 0;
  double confidence = 0.0;  // share of evidence agreeing with the verdict
  std::string rule;
  std::vector<std::size_t> evidence;  // per-iteration token counts
};

// N = 1 + the largest iteration after warm-up (iterations before the first
// multi-token one are dropped). Inconclusive when every iteration has one
// token. Confidence is the share of post-warm-up iterations at the maximum.
ProbeResult leak_n(const StreamClient& client, const TokenSeq& prompt, int n_upper = 16);

// Phrase blocks for the G probe: blocks[p - 1] holds p phrases that all start
// with `key` and differ right after it.
struct PhraseSet {
  TokenId key = 0;
  std::vector<std::vector<TokenSeq>> blocks;
};

// Reads "family<TAB>P<TAB>phrase" lines and returns one family's blocks.
PhraseSet load_phrase_set(const std::string& path, const Vocab& vocab, int family);
int phrase_families(const std::string& path);

struct GProbePoint {
  int p = 0;
  std::size_t correct = 0;  // steady-state post-key tokens inside multi-token iterations
  std::size_t missed = 0;   // steady-state post-key tokens alone in an iteration
  std::vector<std::size_t> counts;
  std::vector<std::size_t> miss_positions;  // token offsets of steady-state misses
};

struct GProbeResult {
  ProbeResult verdict;
  std::vector<GProbePoint> points;
};

// For P = 1 .. g_upper + 1 the model is driven around a cycle of P phrases.
// Once every phrase has appeared twice, each post-key token is classified:
// mis-speculated when it is a single-token iteration, correctly speculated
// otherwise. G is the last P before the first P whose post-key tokens are
// mostly mis-speculated; inconclusive if that never happens or P = 1 fails.
GProbeResult leak_g(const StreamClient& client, const PhraseSet& phrases, int g_upper);

nlohmann::json to_json(const ProbeResult& r);
nlohmann::json to_json(const GProbeResult& r);

}  // namespace specleak
