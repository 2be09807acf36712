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

// Word-level vocabulary and a seeded additive-smoothing n-gram model. The model
// is the stand-in for every "target" and "draft" LLM in the testbed.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace specleak {

using TokenId = std::uint32_t;
using TokenSeq = std::vector<TokenId>;

inline constexpr TokenId kBos = 0;
inline constexpr TokenId kEos = 1;
inline constexpr TokenId kUnk = 2;
inline constexpr TokenId kFirstWordId = 3;

class Vocab {
 public:
  Vocab();

  // Returns the id of `word`, adding it if new.
  TokenId add(std::string_view word);
  std::optional<TokenId> find(std::string_view word) const;
  const std::string& word(TokenId id) const;
  std::size_t size() const noexcept { return entries_.size(); }
  std::span<const std::string> entries() const noexcept { return entries_; }

  static bool is_reserved(TokenId id) noexcept { return id < kFirstWordId; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> entries_;
  std::unordered_map<std::string, TokenId, Hash, std::equal_to<>> index_;
};

enum class UnknownWords { kError, kMapToUnk };

TokenSeq tokenize(std::string_view text, const Vocab& vocab, UnknownWords policy = UnknownWords::kError);
std::string detokenize(std::span<const TokenId> tokens, const Vocab& vocab, std::string_view separator = " ");

// Splits on ASCII whitespace.
std::vector<std::string_view> split_words(std::string_view text);

// Builds a vocabulary in first-occurrence order over all lines.
Vocab build_vocab(std::span<const std::string> lines);

// One document per non-blank line. Throws IoError / ConfigError (empty).
std::vector<std::string> read_corpus_lines(const std::string& path);

// Counter-based generator: the n-th draw is a pure function of (seed, n), so a
// session can be replayed from its seed alone.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

  std::uint64_t next() noexcept;
  // Uniform in [0, 1) with 53 bits.
  double uniform() noexcept;
  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;
  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

// Mixes several values into one seed (splitmix finalizer chain).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) noexcept;

struct SamplerConfig {
  double temperature = 0.0;  // 0 = argmax, lowest id on ties
  std::uint64_t seed = 0;
};

// Draw from an explicit distribution: argmax at temperature 0, otherwise from
// p^(1/t) renormalized.
TokenId sample_from(std::span<const double> probs, double temperature, CounterRng& rng);

class NGramModel {
 public:
  static constexpr int kMaxOrder = 8;

  int order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }
  const Vocab& vocab() const noexcept { return vocab_; }
  std::size_t vocab_size() const noexcept { return vocab_.size(); }
  std::size_t context_count() const noexcept { return table_.size(); }

  // Full smoothed distribution; only the trailing order-1 tokens of `context`
  // matter and shorter contexts are BOS-padded.
  std::vector<double> next_distribution(std::span<const TokenId> context) const;

  double probability(std::span<const TokenId> context, TokenId token) const;
  double max_probability(std::span<const TokenId> context) const;

  // Temperature-0 choice without materializing the distribution.
  TokenId greedy(std::span<const TokenId> context) const;

  TokenId sample(std::span<const TokenId> context, double temperature, CounterRng& rng) const;

  // Raw successor count for (context, token); used by tests and reports.
  std::uint32_t count(std::span<const TokenId> context, TokenId token) const;
  std::uint32_t context_total(std::span<const TokenId> context) const;

  void save(std::ostream& out) const;
  static NGramModel load(std::istream& in, const std::string& source_name = "<stream>");
  void save_file(const std::string& path) const;
  static NGramModel load_file(const std::string& path);

  friend NGramModel train_ngram(std::span<const TokenSeq> corpus, int order, double alpha, Vocab vocab);

 private:
  struct Key {
    std::array<TokenId, kMaxOrder - 1> ids{};
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  struct Successors {
    std::vector<std::pair<TokenId, std::uint32_t>> entries;  // sorted by token id
    std::uint64_t total = 0;
    TokenId argmax = 0;
    std::uint32_t max_count = 0;
  };

  Key make_key(std::span<const TokenId> context) const noexcept;
  const Successors* find(std::span<const TokenId> context) const;
  double denominator(const Successors* s) const noexcept;

  int order_ = 1;
  double alpha_ = 0.1;
  Vocab vocab_;
  std::unordered_map<Key, Successors, KeyHash> table_;
};

// Counts (context, successor) pairs with order-1 BOS tokens in front of every
// sequence and an EOS after it. Throws ConfigError on bad parameters or an
// empty corpus.
NGramModel train_ngram(std::span<const TokenSeq> corpus, int order, double alpha, Vocab vocab);

// Convenience: vocabulary + tokenization + training from corpus lines.
NGramModel train_ngram_from_lines(std::span<const std::string> lines, int order, double alpha);

}  // namespace specleak
