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
#include <fstream>
#include <numeric>

#include "session.hpp"
#include "specleak/error.hpp"

namespace specleak {

namespace {

constexpr TokenId kSeparator = 0xFFFFFFFFu;

// Prefix doubling, O(n log^2 n). Fine for stores of a few hundred thousand
// tokens.
std::vector<std::uint32_t> build_suffix_array(const std::vector<TokenId>& text) {
  const std::size_t n = text.size();
  std::vector<std::uint32_t> sa(n);
  std::iota(sa.begin(), sa.end(), 0u);
  std::vector<std::uint64_t> rank(text.begin(), text.end());
  std::vector<std::uint64_t> next(n);
  for (std::size_t k = 1;; k <<= 1) {
    auto key = [&](std::uint32_t i) {
      const std::uint64_t second = i + k < n ? rank[i + k] + 1 : 0;
      return std::pair(rank[i], second);
    };
    std::sort(sa.begin(), sa.end(), [&](std::uint32_t a, std::uint32_t b) { return key(a) < key(b); });
    if (n == 0) break;
    next[sa[0]] = 0;
    for (std::size_t i = 1; i < n; ++i) next[sa[i]] = next[sa[i - 1]] + (key(sa[i - 1]) < key(sa[i]) ? 1 : 0);
    rank.swap(next);
    if (rank[sa[n - 1]] == n - 1 || k >= n) break;
  }
  return sa;
}

}  // namespace

void RetrievalParams::validate() const {
  if (max_match_len < 1) throw ConfigError("retrieval max_match_len must be >= 1");
  if (top_k < 1) throw ConfigError("retrieval top_k must be >= 1");
  if (draft_len < 1) throw ConfigError("retrieval draft_len must be >= 1");
}

RetrievalDatastore::RetrievalDatastore(std::vector<TokenSeq> sequences, RetrievalParams params)
    : sequences_(std::move(sequences)), params_(params) {
  params_.validate();
  for (const auto& seq : sequences_) {
    text_.insert(text_.end(), seq.begin(), seq.end());
    text_.push_back(kSeparator);
  }
  suffix_ = build_suffix_array(text_);
}

std::pair<std::size_t, std::size_t> RetrievalDatastore::equal_range(std::span<const TokenId> pattern) const {
  const std::size_t n = text_.size();
  // Compare the suffix at `pos`, truncated to the pattern length, with the
  // pattern: -1 less, 0 prefix match, 1 greater.
  auto cmp = [&](std::uint32_t pos) {
    for (std::size_t i = 0; i < pattern.size(); ++i) {
      if (pos + i >= n) return -1;
      if (text_[pos + i] != pattern[i]) return text_[pos + i] < pattern[i] ? -1 : 1;
    }
    return 0;
  };
  auto lo = std::partition_point(suffix_.begin(), suffix_.end(), [&](std::uint32_t p) { return cmp(p) < 0; });
  auto hi = std::partition_point(lo, suffix_.end(), [&](std::uint32_t p) { return cmp(p) == 0; });
  return {static_cast<std::size_t>(lo - suffix_.begin()), static_cast<std::size_t>(hi - suffix_.begin())};
}

bool RetrievalDatastore::contains(std::span<const TokenId> needle) const {
  if (needle.empty()) return true;
  if (std::find(needle.begin(), needle.end(), kSeparator) != needle.end()) return false;
  auto [lo, hi] = equal_range(needle);
  return lo < hi;
}

RetrievalDatastore::Retrieval RetrievalDatastore::retrieve(std::span<const TokenId> context) const {
  Retrieval out;
  const std::size_t longest = std::min(params_.max_match_len, context.size());
  for (std::size_t len = longest; len >= 1; --len) {
    auto pattern = context.subspan(context.size() - len);
    auto [lo, hi] = equal_range(pattern);

    struct Group {
      TokenSeq cont;
      std::size_t count;
      std::uint32_t first;
    };
    std::vector<Group> groups;
    // Suffixes sharing the same continuation are adjacent in suffix order.
    for (std::size_t row = lo; row < hi; ++row) {
      const std::size_t start = suffix_[row] + len;
      TokenSeq cont;
      for (std::size_t i = start; i < text_.size() && cont.size() < params_.draft_len; ++i) {
        if (text_[i] == kSeparator) break;
        cont.push_back(text_[i]);
      }
      if (cont.empty()) continue;
      if (!groups.empty() && groups.back().cont == cont) {
        ++groups.back().count;
        groups.back().first = std::min(groups.back().first, suffix_[row]);
      } else {
        groups.push_back({std::move(cont), 1, suffix_[row]});
      }
    }
    if (groups.empty()) continue;
    std::sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.first < b.first;
    });
    out.match_len = len;
    for (std::size_t i = 0; i < groups.size() && i < params_.top_k; ++i) out.drafts.push_back(std::move(groups[i].cont));
    return out;
  }
  return out;
}

RetrievalDatastore load_datastore(const std::string& path, const Vocab& vocab, RetrievalParams params) {
  std::vector<TokenSeq> seqs;
  for (const auto& line : read_corpus_lines(path)) seqs.push_back(tokenize(line, vocab, UnknownWords::kMapToUnk));
  return RetrievalDatastore(std::move(seqs), params);
}

DecodeTrace decode_retrieval(const NGramModel& model, std::span<const TokenId> prompt, std::size_t max_tokens,
                             const RetrievalDatastore& store, const SamplerConfig& cfg) {
  detail::Session s(prompt, max_tokens);
  CounterRng rng(cfg.seed);
  while (!s.done()) {
    const TokenSeq& stream = s.stream();
    const auto found = store.retrieve(stream);
    const TokenSeq* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& d : found.drafts) {
      const std::size_t acc = verify_greedy(model, stream, d);
      if (acc > best_len) {
        best_len = acc;
        best = &d;
      }
    }
    TokenSeq tokens;
    if (best != nullptr) tokens.assign(best->begin(), best->begin() + static_cast<std::ptrdiff_t>(best_len));
    tokens.push_back(model.sample(detail::model_window(model, stream, tokens), cfg.temperature, rng));
    s.emit(std::move(tokens), best_len);
  }
  return std::move(s).take();
}

}  // namespace specleak
