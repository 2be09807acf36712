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

#include <algorithm>
#include <charconv>
#include <fstream>

#include "specleak/error.hpp"
#include "specleak/extraction.hpp"

namespace specleak {

TokenSeq Leak::tokens() const {
  TokenSeq out{context};
  out.insert(out.end(), block.begin(), block.end());
  return out;
}

std::vector<Leak> detect_leaks(const SessionLog& log, std::span<const TokenId> prompt) {
  if (log.policy != "none") {
    throw ConfigError("leak detection needs per-iteration token counts; session used mitigation '" + log.policy + "'");
  }
  if (log.engine != engine_name(EngineKind::kRetrieval)) {
    throw ConfigError("leak detection targets the retrieval engine, session used '" + log.engine + "'");
  }
  std::vector<Leak> out;
  // The retrieval matched on the last token before the iteration, so that
  // token belongs to the stored fragment too.
  for (std::size_t i = 0; i < log.iterations.size(); ++i) {
    const auto& it = log.iterations[i];
    if (it.speculated_accepted == 0) continue;
    if (i == 0 && prompt.empty()) continue;
    Leak leak;
    leak.context = i == 0 ? prompt.back() : log.iterations[i - 1].tokens.back();
    leak.block.assign(it.tokens.begin(), it.tokens.begin() + static_cast<std::ptrdiff_t>(it.speculated_accepted));
    out.push_back(std::move(leak));
  }
  return out;
}

// ---------------------------------------------------------------------------

Wordlist Wordlist::load(const std::string& path, const Vocab& vocab, std::size_t top_k) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open word list '" + path + "'");
  Wordlist wl;
  std::string line;
  std::size_t lineno = 0, rank = 0;
  while (std::getline(in, line) && rank < top_k) {
    ++lineno;
    const auto fields = split_words(line);
    if (fields.empty()) continue;
    if (fields.size() > 2) throw ParseError(path, lineno, "expected 'word' or 'word<TAB>count'");
    ++rank;
    double weight = 1.0 / static_cast<double>(rank);
    if (fields.size() == 2) {
      std::uint64_t count = 0;
      const auto f = fields[1];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), count);
      if (ec != std::errc() || ptr != f.data() + f.size()) throw ParseError(path, lineno, "bad count '" + std::string(f) + "'");
      weight = static_cast<double>(count);
    }
    const auto id = vocab.find(fields[0]);
    if (!id || weight <= 0.0) {
      ++wl.skipped;
      continue;
    }
    wl.ids.push_back(*id);
    wl.weights.push_back(weight);
  }
  if (wl.ids.empty()) throw ConfigError("word list '" + path + "' has no words known to the model");
  return wl;
}

TokenId Wordlist::draw(CounterRng& rng) const {
  return ids[sample_from(weights, 1.0, rng)];
}

// ---------------------------------------------------------------------------

void ExtractionStrategy::validate() const {
  if (budget < 1) throw ConfigError("extraction budget must be >= 1");
  if (tokens_per_query < 1) throw ConfigError("tokens_per_query must be >= 1");
  if (kind != Kind::kRandom && !wordlist) {
    throw ConfigError(std::string(strategy_name(kind)) + " strategy needs a word list");
  }
}

std::string_view strategy_name(ExtractionStrategy::Kind kind) {
  switch (kind) {
    case ExtractionStrategy::Kind::kRandom:
      return "random";
    case ExtractionStrategy::Kind::kCommonWords:
      return "common_words";
    case ExtractionStrategy::Kind::kFeedbackReuse:
      return "feedback_reuse";
  }
  return "unknown";
}

ExtractionStrategy::Kind parse_strategy(std::string_view name) {
  using K = ExtractionStrategy::Kind;
  for (auto k : {K::kRandom, K::kCommonWords, K::kFeedbackReuse}) {
    if (strategy_name(k) == name) return k;
  }
  throw ConfigError("unknown extraction strategy '" + std::string(name) + "'");
}

bool LeakLedger::add(const Leak& leak, std::size_t query) {
  if (!seen_.insert(leak).second) return false;
  leaked.push_back({leak, query});
  return true;
}

TokenSeq build_query(const ExtractionStrategy& strategy, const Vocab& vocab, QueryState& state, CounterRng& rng) {
  using K = ExtractionStrategy::Kind;
  // At temperature 0 a leak replays identically, so each one is reused once.
  if (strategy.kind == K::kFeedbackReuse && state.ledger != nullptr && state.cursor < state.ledger->unique()) {
    return state.ledger->leaked[state.cursor++].leak.tokens();
  }
  TokenSeq out;
  out.reserve(strategy.tokens_per_query);
  if (strategy.kind == K::kRandom) {
    const std::size_t words = vocab.size() - kFirstWordId;
    if (words == 0) throw ConfigError("vocabulary has no words to sample");
    for (std::size_t i = 0; i < strategy.tokens_per_query; ++i) {
      out.push_back(static_cast<TokenId>(kFirstWordId + rng.below(words)));
    }
  } else {
    for (std::size_t i = 0; i < strategy.tokens_per_query; ++i) out.push_back(strategy.wordlist->draw(rng));
  }
  return out;
}

LeakLedger run_extraction(const ExtractionTarget& target, const ExtractionStrategy& strategy, std::uint64_t seed) {
  strategy.validate();
  if (target.model == nullptr) throw ConfigError("extraction needs a target model");
  if (!target.store) throw ConfigError("extraction needs a retrieval datastore");

  SessionConfig session;
  session.model = target.model;
  session.engine.kind = EngineKind::kRetrieval;
  session.engine.store = target.store;
  session.max_tokens = target.max_tokens;

  LeakLedger ledger;
  QueryState state{&ledger, 0};
  CounterRng rng(derive_seed(seed, 0xE7));
  for (std::size_t q = 0; q < strategy.budget; ++q) {
    session.prompt = build_query(strategy, target.model->vocab(), state, rng);
    session.sampler = {target.temperature, derive_seed(seed, q, 0x5E55)};
    const SessionLog log = serve(session);
    for (const auto& leak : detect_leaks(log, session.prompt)) ledger.add(leak, q);
    ledger.timeline.push_back(ledger.unique());
  }
  return ledger;
}

double ledger_soundness(const LeakLedger& ledger, const RetrievalDatastore& store) {
  if (ledger.leaked.empty()) return 1.0;
  std::size_t ok = 0;
  for (const auto& e : ledger.leaked) ok += store.contains(e.leak.tokens()) ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(ledger.leaked.size());
}

nlohmann::json to_json(const LeakLedger& ledger, const Vocab& vocab) {
  nlohmann::json leaks = nlohmann::json::array();
  for (const auto& e : ledger.leaked) {
    leaks.push_back({{"context", vocab.word(e.leak.context)},
                     {"block", detokenize(e.leak.block, vocab)},
                     {"first_query", e.first_query}});
  }
  return {{"unique", ledger.unique()}, {"timeline", ledger.timeline}, {"leaks", std::move(leaks)}};
}

}  // namespace specleak
