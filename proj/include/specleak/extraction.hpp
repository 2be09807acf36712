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

// Datastore extraction against the retrieval engine. A malicious client sees
// how many tokens arrive per iteration; any iteration that carries accepted
// draft tokens reveals a piece of the datastore.

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "specleak/stream.hpp"

namespace specleak {

// One leaked fragment: the context token the retrieval matched on, followed by
// the accepted block. The pair occurs contiguously in the store.
struct Leak {
  TokenId context = 0;
  TokenSeq block;

  TokenSeq tokens() const;
  auto operator<=>(const Leak&) const = default;
};

// `prompt` is what the client sent; its last token is the context of the first
// iteration (without it that iteration is skipped). Throws ConfigError for a
// mitigated or non-retrieval session.
std::vector<Leak> detect_leaks(const SessionLog& log, std::span<const TokenId> prompt = {});

// Frequency-ranked word list; either "word<TAB>count" lines or bare words (then
// weighted 1/rank). Words the model does not know are skipped.
struct Wordlist {
  std::vector<TokenId> ids;
  std::vector<double> weights;
  std::size_t skipped = 0;

  static Wordlist load(const std::string& path, const Vocab& vocab, std::size_t top_k = 10000);
  TokenId draw(CounterRng& rng) const;
};

struct ExtractionStrategy {
  enum class Kind { kRandom, kCommonWords, kFeedbackReuse };

  Kind kind = Kind::kRandom;
  std::size_t budget = 100;           // queries
  std::size_t tokens_per_query = 8;   // prompt length for Random / CommonWords
  std::shared_ptr<const Wordlist> wordlist;  // CommonWords, and FeedbackReuse fallback
  void validate() const;
};

std::string_view strategy_name(ExtractionStrategy::Kind kind);
ExtractionStrategy::Kind parse_strategy(std::string_view name);

struct LeakLedger {
  struct Entry {
    Leak leak;
    std::size_t first_query = 0;
  };
  std::vector<Entry> leaked;  // first-seen order
  std::vector<std::size_t> timeline;  // unique leaks after query i + 1

  bool add(const Leak& leak, std::size_t query);  // false if already known
  std::size_t unique() const noexcept { return leaked.size(); }

 private:
  std::set<Leak> seen_;
};

struct QueryState {
  const LeakLedger* ledger = nullptr;
  std::size_t cursor = 0;  // next ledger entry FeedbackReuse will replay
};

// Random draws word ids uniformly; CommonWords draws from the word list by
// weight; FeedbackReuse replays known leaks verbatim in first-seen order, each
// once, and falls back to CommonWords while none is waiting.
TokenSeq build_query(const ExtractionStrategy& strategy, const Vocab& vocab, QueryState& state, CounterRng& rng);

struct ExtractionTarget {
  const NGramModel* model = nullptr;
  std::shared_ptr<const RetrievalDatastore> store;
  std::size_t max_tokens = 32;
  double temperature = 0.0;
};

LeakLedger run_extraction(const ExtractionTarget& target, const ExtractionStrategy& strategy, std::uint64_t seed);

// Fraction of ledger entries found verbatim in `store` (1 for an empty ledger).
double ledger_soundness(const LeakLedger& ledger, const RetrievalDatastore& store);

nlohmann::json to_json(const LeakLedger& ledger, const Vocab& vocab);

}  // namespace specleak
