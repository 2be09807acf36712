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

#include <algorithm>

#include "specleak/specdec.hpp"

namespace specleak::detail {

// Prompt + output stream plus the iteration log of one decoding session.
class Session {
 public:
  Session(std::span<const TokenId> prompt, std::size_t max_tokens)
      : stream_(prompt.begin(), prompt.end()), max_tokens_(max_tokens), done_(max_tokens == 0) {}

  const TokenSeq& stream() const noexcept { return stream_; }
  bool done() const noexcept { return done_; }
  std::size_t remaining() const noexcept { return max_tokens_ - emitted_; }

  // Appends one iteration; stops the session at EOS (not emitted) or when the
  // token budget runs out.
  void emit(TokenSeq tokens, std::size_t accepted) {
    if (auto eos = std::find(tokens.begin(), tokens.end(), kEos); eos != tokens.end()) {
      tokens.erase(eos, tokens.end());
      done_ = true;
    }
    if (tokens.size() >= remaining()) {
      tokens.resize(remaining());
      done_ = true;
    }
    if (tokens.empty()) {
      done_ = true;
      return;
    }
    DecodeIteration it;
    it.index = iterations_.size();
    it.speculated_accepted = std::min(accepted, tokens.size());
    emitted_ += tokens.size();
    stream_.insert(stream_.end(), tokens.begin(), tokens.end());
    it.tokens = std::move(tokens);
    iterations_.push_back(std::move(it));
  }

  DecodeTrace take() && { return std::move(iterations_); }

 private:
  TokenSeq stream_;
  std::size_t max_tokens_;
  std::size_t emitted_ = 0;
  bool done_;
  DecodeTrace iterations_;
};

// Trailing order-1 tokens of `context` followed by `extra`: everything the
// model needs to score the next position.
inline TokenSeq model_window(const NGramModel& model, std::span<const TokenId> context,
                             std::span<const TokenId> extra = {}) {
  const std::size_t width = static_cast<std::size_t>(model.order() - 1);
  const std::size_t take = std::min(width, context.size());
  TokenSeq w(context.end() - static_cast<std::ptrdiff_t>(take), context.end());
  w.insert(w.end(), extra.begin(), extra.end());
  return w;
}

}  // namespace specleak::detail
