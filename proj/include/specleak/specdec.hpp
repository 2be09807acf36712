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

// Speculative decoding engines. Each engine turns a prompt into a list of
// iterations; the iteration boundaries are what leaks over the network.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "specleak/lm.hpp"

namespace specleak {

struct DecodeIteration {
  std::size_t index = 0;
  TokenSeq tokens;  // never empty
  // Tokens taken from an accepted speculation. For the lookahead engine a fully
  // accepted (N-1)-gram has speculated_accepted == tokens.size(); otherwise the
  // last token is target-generated.
  std::size_t speculated_accepted = 0;
};

using DecodeTrace = std::vector<DecodeIteration>;

TokenSeq concat_tokens(std::span<const DecodeIteration> iterations);
std::vector<std::size_t> token_counts(std::span<const DecodeIteration> iterations);

// Length of the longest prefix of `draft` that matches the target's
// temperature-0 chain starting from `context`.
std::size_t verify_greedy(const NGramModel& target, std::span<const TokenId> context, std::span<const TokenId> draft);

TokenSeq greedy_continuation(const NGramModel& model, std::span<const TokenId> context, std::size_t max_tokens);

DecodeTrace decode_autoregressive(const NGramModel& model, std::span<const TokenId> prompt, std::size_t max_tokens,
                                  const SamplerConfig& cfg);

// ---------------------------------------------------------------------------
// Self-drafting (lookahead) engine

struct LookaheadConfig {
  int n = 5;  // n-gram size; speculations are (n-1)-grams
  int g = 5;  // candidates kept per key
  void validate() const;
};

// key token -> up to G candidate grams, oldest first. Inserting an existing
// gram moves it to the back; overflowing evicts the front.
class LookaheadCache {
 public:
  explicit LookaheadCache(std::size_t capacity);

  void insert(TokenId key, std::span<const TokenId> gram);
  std::span<const TokenSeq> candidates(TokenId key) const;
  bool contains(TokenId key, std::span<const TokenId> gram) const;
  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t key_count() const noexcept { return map_.size(); }
  std::size_t max_list_size() const noexcept;

 private:
  std::size_t capacity_;
  std::unordered_map<TokenId, std::vector<TokenSeq>> map_;
};

// The cache starts empty and is fed every (N-1)-gram of prompt + output as soon
// as it is complete. Each iteration queries with the last token, keeps the
// candidate with the longest greedy-verified prefix (most recent wins ties),
// and emits either the whole N-1 gram or the verified prefix plus one target
// token.
DecodeTrace decode_lookahead(const NGramModel& model, std::span<const TokenId> prompt, std::size_t max_tokens,
                             const LookaheadConfig& la, const SamplerConfig& cfg);

// ---------------------------------------------------------------------------
// Retrieval engine

struct RetrievalParams {
  std::size_t max_match_len = 6;
  std::size_t top_k = 4;
  std::size_t draft_len = 3;
  void validate() const;
};

class RetrievalDatastore {
 public:
  RetrievalDatastore() = default;
  RetrievalDatastore(std::vector<TokenSeq> sequences, RetrievalParams params);

  struct Retrieval {
    std::size_t match_len = 0;    // 0 = nothing matched
    std::vector<TokenSeq> drafts;  // ranked, at most top_k
  };

  // Longest suffix of `context` (capped at max_match_len) that occurs in the
  // store with a non-empty continuation; drafts are the following draft_len
  // tokens ranked by frequency, then by first occurrence.
  Retrieval retrieve(std::span<const TokenId> context) const;

  // Contiguous occurrence anywhere in one stored sequence.
  bool contains(std::span<const TokenId> needle) const;

  const std::vector<TokenSeq>& sequences() const noexcept { return sequences_; }
  const RetrievalParams& params() const noexcept { return params_; }
  bool empty() const noexcept { return sequences_.empty(); }

 private:
  // [lo, hi) range of suffix-array rows whose suffix starts with `pattern`.
  std::pair<std::size_t, std::size_t> equal_range(std::span<const TokenId> pattern) const;

  std::vector<TokenSeq> sequences_;
  RetrievalParams params_;
  std::vector<TokenId> text_;        // sequences joined by kSeparator
  std::vector<std::uint32_t> suffix_;  // suffix array over text_
};

RetrievalDatastore load_datastore(const std::string& path, const Vocab& vocab, RetrievalParams params);

DecodeTrace decode_retrieval(const NGramModel& model, std::span<const TokenId> prompt, std::size_t max_tokens,
                             const RetrievalDatastore& store, const SamplerConfig& cfg);

// ---------------------------------------------------------------------------
// Draft-model engine

struct DraftPairConfig {
  const NGramModel* draft = nullptr;
  std::size_t draft_len = 4;
  double fallback_threshold = 0.5;  // stop drafting when draft confidence drops below
  double rollback_threshold = 2.0;  // max accepted cross-entropy (nats) under the target
  void validate() const;
};

DecodeTrace decode_draft_pair(const NGramModel& model, std::span<const TokenId> prompt, std::size_t max_tokens,
                              const DraftPairConfig& pair, const SamplerConfig& cfg);

// ---------------------------------------------------------------------------

enum class EngineKind { kAutoregressive, kLookahead, kRetrieval, kDraftPair };

std::string_view engine_name(EngineKind kind);
EngineKind parse_engine_kind(std::string_view name);

// Immutable description of an engine; safe to share across sessions.
struct EngineSpec {
  EngineKind kind = EngineKind::kAutoregressive;
  LookaheadConfig lookahead;
  std::shared_ptr<const RetrievalDatastore> store;
  std::shared_ptr<const NGramModel> draft_model;
  DraftPairConfig pair;  // pair.draft is filled from draft_model
  void validate() const;
};

DecodeTrace run_engine(const EngineSpec& engine, const NGramModel& target, std::span<const TokenId> prompt,
                       std::size_t max_tokens, const SamplerConfig& cfg);

}  // namespace specleak
