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

#include <fstream>

#include "specleak/error.hpp"
#include "specleak/lm.hpp"

namespace specleak {

namespace {

constexpr std::array<std::string_view, 3> kReserved = {"<s>", "</s>", "<unk>"};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

}  // namespace

Vocab::Vocab() {
  for (auto w : kReserved) add(w);
}

TokenId Vocab::add(std::string_view word) {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  const auto id = static_cast<TokenId>(entries_.size());
  entries_.emplace_back(word);
  index_.emplace(entries_.back(), id);
  return id;
}

std::optional<TokenId> Vocab::find(std::string_view word) const {
  if (auto it = index_.find(word); it != index_.end()) return it->second;
  return std::nullopt;
}

const std::string& Vocab::word(TokenId id) const {
  if (id >= entries_.size()) throw Error("token id " + std::to_string(id) + " outside vocabulary");
  return entries_[id];
}

std::vector<std::string_view> split_words(std::string_view text) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.push_back(text.substr(start, i - start));
  }
  return words;
}

TokenSeq tokenize(std::string_view text, const Vocab& vocab, UnknownWords policy) {
  TokenSeq out;
  for (auto w : split_words(text)) {
    if (auto id = vocab.find(w)) {
      out.push_back(*id);
    } else if (policy == UnknownWords::kMapToUnk) {
      out.push_back(kUnk);
    } else {
      throw Error("unknown word '" + std::string(w) + "'");
    }
  }
  return out;
}

std::string detokenize(std::span<const TokenId> tokens, const Vocab& vocab, std::string_view separator) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += separator;
    out += vocab.word(tokens[i]);
  }
  return out;
}

Vocab build_vocab(std::span<const std::string> lines) {
  Vocab v;
  for (const auto& line : lines) {
    for (auto w : split_words(line)) v.add(w);
  }
  return v;
}

std::vector<std::string> read_corpus_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!split_words(line).empty()) lines.push_back(line);
  }
  if (lines.empty()) throw ConfigError("corpus file " + path + " has no documents");
  return lines;
}

}  // namespace specleak
