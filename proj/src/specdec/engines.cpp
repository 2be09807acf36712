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
#include <limits>

#include "session.hpp"
#include "specleak/error.hpp"

namespace specleak {

using detail::model_window;
using detail::Session;

TokenSeq concat_tokens(std::span<const DecodeIteration> iterations) {
  TokenSeq out;
  for (const auto& it : iterations) out.insert(out.end(), it.tokens.begin(), it.tokens.end());
  return out;
}

std::vector<std::size_t> token_counts(std::span<const DecodeIteration> iterations) {
  std::vector<std::size_t> out;
  out.reserve(iterations.size());
  for (const auto& it : iterations) out.push_back(it.tokens.size());
  return out;
}

std::size_t verify_greedy(const NGramModel& target, std::span<const TokenId> context, std::span<const TokenId> draft) {
  TokenSeq window = model_window(target, context);
  std::size_t accepted = 0;
  for (TokenId t : draft) {
    if (target.greedy(window) != t) break;
    window.push_back(t);
    ++accepted;
  }
  return accepted;
}

TokenSeq greedy_continuation(const NGramModel& model, std::span<const TokenId> context, std::size_t max_tokens) {
  TokenSeq window = model_window(model, context);
  TokenSeq out;
  while (out.size() < max_tokens) {
    const TokenId t = model.greedy(window);
    if (t == kEos) break;
    out.push_back(t);
    window.push_back(t);
  }
  return out;
}

DecodeTrace decode_autoregressive(const NGramModel& model, std::span<const TokenId> prompt, std::size_t max_tokens,
                                  const SamplerConfig& cfg) {
  Session s(prompt, max_tokens);
  CounterRng rng(cfg.seed);
  while (!s.done()) {
    const TokenId t = model.sample(model_window(model, s.stream()), cfg.temperature, rng);
    s.emit({t}, 0);
  }
  return std::move(s).take();
}

// ---------------------------------------------------------------------------

void LookaheadConfig::validate() const {
  if (n < 2) throw ConfigError("lookahead N must be >= 2, got " + std::to_string(n));
  if (g < 1) throw ConfigError("lookahead G must be >= 1, got " + std::to_string(g));
}

LookaheadCache::LookaheadCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("lookahead cache capacity must be >= 1");
}

void LookaheadCache::insert(TokenId key, std::span<const TokenId> gram) {
  auto& list = map_[key];
  auto it = std::find_if(list.begin(), list.end(),
                         [&](const TokenSeq& c) { return std::equal(c.begin(), c.end(), gram.begin(), gram.end()); });
  if (it != list.end()) {
    std::rotate(it, it + 1, list.end());  // refresh: move to the back
    return;
  }
  list.emplace_back(gram.begin(), gram.end());
  if (list.size() > capacity_) list.erase(list.begin());
}

std::span<const TokenSeq> LookaheadCache::candidates(TokenId key) const {
  auto it = map_.find(key);
  if (it == map_.end()) return {};
  return it->second;
}

bool LookaheadCache::contains(TokenId key, std::span<const TokenId> gram) const {
  for (const auto& c : candidates(key)) {
    if (std::equal(c.begin(), c.end(), gram.begin(), gram.end())) return true;
  }
  return false;
}

std::size_t LookaheadCache::max_list_size() const noexcept {
  std::size_t m = 0;
  for (const auto& [k, list] : map_) m = std::max(m, list.size());
  return m;
}

DecodeTrace decode_lookahead(const NGramModel& model, std::span<const TokenId> prompt, std::size_t max_tokens,
                             const LookaheadConfig& la, const SamplerConfig& cfg) {
  la.validate();
  const auto gram_len = static_cast<std::size_t>(la.n - 1);
  LookaheadCache cache(static_cast<std::size_t>(la.g));
  Session s(prompt, max_tokens);
  CounterRng rng(cfg.seed);

  std::size_t next_key_pos = 0;
  auto refresh_cache = [&] {
    const TokenSeq& stream = s.stream();
    for (; next_key_pos + gram_len < stream.size(); ++next_key_pos) {
      cache.insert(stream[next_key_pos], std::span<const TokenId>(stream).subspan(next_key_pos + 1, gram_len));
    }
  };
  refresh_cache();

  while (!s.done()) {
    const TokenSeq& stream = s.stream();
    const TokenSeq* best = nullptr;
    std::size_t best_len = 0;
    if (!stream.empty()) {
      auto cands = cache.candidates(stream.back());
      for (auto it = cands.rbegin(); it != cands.rend(); ++it) {
        const std::size_t acc = verify_greedy(model, stream, *it);
        if (acc > best_len) {
          best_len = acc;
          best = &*it;
        }
      }
    }
    TokenSeq tokens;
    if (best != nullptr) tokens.assign(best->begin(), best->begin() + static_cast<std::ptrdiff_t>(best_len));
    if (best_len < gram_len) {
      tokens.push_back(model.sample(model_window(model, stream, tokens), cfg.temperature, rng));
    }
    s.emit(std::move(tokens), best_len);
    refresh_cache();
  }
  return std::move(s).take();
}

// ---------------------------------------------------------------------------

void DraftPairConfig::validate() const {
  if (draft == nullptr) throw ConfigError("draft-pair engine needs a draft model");
  if (draft_len < 1) throw ConfigError("draft_len must be >= 1");
  if (!(fallback_threshold > 0.0 && fallback_threshold <= 1.0)) {
    throw ConfigError("fallback_threshold must be in (0, 1]");
  }
  if (!(rollback_threshold > 0.0)) throw ConfigError("rollback_threshold must be > 0");
}

DecodeTrace decode_draft_pair(const NGramModel& model, std::span<const TokenId> prompt, std::size_t max_tokens,
                              const DraftPairConfig& pair, const SamplerConfig& cfg) {
  pair.validate();
  const NGramModel& draft_model = *pair.draft;
  Session s(prompt, max_tokens);
  CounterRng rng(cfg.seed);
  while (!s.done()) {
    const TokenSeq& stream = s.stream();

    TokenSeq draft;
    TokenSeq dwin = model_window(draft_model, stream);
    while (draft.size() < pair.draft_len) {
      if (draft_model.max_probability(dwin) < pair.fallback_threshold) break;  // fallback
      const TokenId t = draft_model.greedy(dwin);
      draft.push_back(t);
      dwin.push_back(t);
      if (t == kEos) break;
    }

    // Rollback at the first draft token the target finds too surprising.
    TokenSeq twin = model_window(model, stream);
    std::size_t accepted = 0;
    for (TokenId t : draft) {
      const double ce = -std::log(model.probability(twin, t));
      if (ce > pair.rollback_threshold) break;
      twin.push_back(t);
      ++accepted;
    }
    TokenSeq tokens(draft.begin(), draft.begin() + static_cast<std::ptrdiff_t>(accepted));
    tokens.push_back(model.sample(twin, cfg.temperature, rng));
    s.emit(std::move(tokens), accepted);
  }
  return std::move(s).take();
}

// ---------------------------------------------------------------------------

std::string_view engine_name(EngineKind kind) {
  switch (kind) {
    case EngineKind::kAutoregressive:
      return "autoregressive";
    case EngineKind::kLookahead:
      return "lookahead";
    case EngineKind::kRetrieval:
      return "retrieval";
    case EngineKind::kDraftPair:
      return "draft_pair";
  }
  return "unknown";
}

EngineKind parse_engine_kind(std::string_view name) {
  for (auto k : {EngineKind::kAutoregressive, EngineKind::kLookahead, EngineKind::kRetrieval, EngineKind::kDraftPair}) {
    if (engine_name(k) == name) return k;
  }
  throw ConfigError("unknown engine type '" + std::string(name) + "'");
}

void EngineSpec::validate() const {
  switch (kind) {
    case EngineKind::kAutoregressive:
      return;
    case EngineKind::kLookahead:
      lookahead.validate();
      return;
    case EngineKind::kRetrieval:
      if (!store) throw ConfigError("retrieval engine needs a datastore");
      store->params().validate();
      return;
    case EngineKind::kDraftPair: {
      DraftPairConfig p = pair;
      p.draft = draft_model ? draft_model.get() : pair.draft;
      p.validate();
      return;
    }
  }
}

DecodeTrace run_engine(const EngineSpec& engine, const NGramModel& target, std::span<const TokenId> prompt,
                       std::size_t max_tokens, const SamplerConfig& cfg) {
  switch (engine.kind) {
    case EngineKind::kAutoregressive:
      return decode_autoregressive(target, prompt, max_tokens, cfg);
    case EngineKind::kLookahead:
      return decode_lookahead(target, prompt, max_tokens, engine.lookahead, cfg);
    case EngineKind::kRetrieval:
      if (!engine.store) throw ConfigError("retrieval engine needs a datastore");
      return decode_retrieval(target, prompt, max_tokens, *engine.store, cfg);
    case EngineKind::kDraftPair: {
      DraftPairConfig p = engine.pair;
      if (engine.draft_model) p.draft = engine.draft_model.get();
      return decode_draft_pair(target, prompt, max_tokens, p, cfg);
    }
  }
  throw ConfigError("unknown engine kind");
}

}  // namespace specleak
