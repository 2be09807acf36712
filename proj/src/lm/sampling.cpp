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
#include <vector>

#include "specleak/kernels.hpp"
#include "specleak/lm.hpp"

namespace specleak {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::next() noexcept {
  ++counter_;
  return mix64(seed_ + counter_ * kGolden);
}

double CounterRng::uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t CounterRng::below(std::uint64_t n) noexcept {
  // Multiply-shift; the bias is at most n / 2^64.
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
  std::uint64_t h = mix64(base + kGolden);
  h = mix64(h ^ (a + 0x632BE59BD9B4E019ULL));
  h = mix64(h ^ (b + 0x8CB92BA72F3D8DD7ULL));
  h = mix64(h ^ (c + 0xD6E8FEB86659FD93ULL));
  return h;
}

TokenId sample_from(std::span<const double> probs, double temperature, CounterRng& rng) {
  if (probs.empty()) return 0;
  const std::size_t best = kernels::argmax(probs);
  if (temperature <= 0.0) return static_cast<TokenId>(best);

  const double log_max = std::log(probs[best]);
  std::vector<double> w(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    w[i] = probs[i] > 0.0 ? std::exp((std::log(probs[i]) - log_max) / temperature) : 0.0;
  }
  const double total = kernels::sum(w);
  double u = rng.uniform() * total;
  std::size_t last_nonzero = best;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0.0) continue;
    last_nonzero = i;
    if (u < w[i]) return static_cast<TokenId>(i);
    u -= w[i];
  }
  return static_cast<TokenId>(last_nonzero);
}

}  // namespace specleak
