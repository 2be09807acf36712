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
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "specleak/error.hpp"
#include "specleak/kernels.hpp"
#include "specleak/lm.hpp"

namespace specleak {

namespace {

constexpr std::string_view kMagic = "specleak-ngram";
constexpr int kFormatVersion = 1;

}  // namespace

std::size_t NGramModel::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (TokenId id : k.ids) {
    h ^= id;
    h *= 0x100000001b3ULL;
  }
  return static_cast<std::size_t>(h ^ (h >> 29));
}

NGramModel::Key NGramModel::make_key(std::span<const TokenId> context) const noexcept {
  Key key;
  const auto width = static_cast<std::size_t>(order_ - 1);
  const std::size_t take = std::min(width, context.size());
  // Right-aligned; missing leading positions stay BOS (= 0).
  for (std::size_t i = 0; i < take; ++i) key.ids[width - take + i] = context[context.size() - take + i];
  return key;
}

const NGramModel::Successors* NGramModel::find(std::span<const TokenId> context) const {
  auto it = table_.find(make_key(context));
  return it == table_.end() ? nullptr : &it->second;
}

double NGramModel::denominator(const Successors* s) const noexcept {
  const double total = s != nullptr ? static_cast<double>(s->total) : 0.0;
  return total + alpha_ * static_cast<double>(vocab_.size());
}

std::vector<double> NGramModel::next_distribution(std::span<const TokenId> context) const {
  const Successors* s = find(context);
  std::vector<double> p(vocab_.size(), alpha_);
  if (s != nullptr) {
    for (auto [id, c] : s->entries) p[id] += static_cast<double>(c);
  }
  kernels::scale(p, 1.0 / denominator(s));
  return p;
}

double NGramModel::probability(std::span<const TokenId> context, TokenId token) const {
  const Successors* s = find(context);
  return (static_cast<double>(count(context, token)) + alpha_) / denominator(s);
}

double NGramModel::max_probability(std::span<const TokenId> context) const {
  const Successors* s = find(context);
  const double top = s != nullptr ? static_cast<double>(s->max_count) : 0.0;
  return (top + alpha_) / denominator(s);
}

TokenId NGramModel::greedy(std::span<const TokenId> context) const {
  const Successors* s = find(context);
  // An unseen context is uniform, so the lowest id wins the tie.
  return s != nullptr ? s->argmax : TokenId{0};
}

std::uint32_t NGramModel::count(std::span<const TokenId> context, TokenId token) const {
  const Successors* s = find(context);
  if (s == nullptr) return 0;
  auto it = std::lower_bound(s->entries.begin(), s->entries.end(), token,
                             [](const auto& e, TokenId t) { return e.first < t; });
  return (it != s->entries.end() && it->first == token) ? it->second : 0;
}

std::uint32_t NGramModel::context_total(std::span<const TokenId> context) const {
  const Successors* s = find(context);
  return s != nullptr ? static_cast<std::uint32_t>(s->total) : 0;
}

TokenId NGramModel::sample(std::span<const TokenId> context, double temperature, CounterRng& rng) const {
  const Successors* s = find(context);
  const std::uint64_t v = vocab_.size();
  if (s == nullptr) {
    // Uniform; at temperature 0 the tie-break picks id 0.
    return temperature <= 0.0 ? TokenId{0} : static_cast<TokenId>(rng.below(v));
  }
  if (temperature <= 0.0) return s->argmax;

  // Walk the id-ordered CDF without materializing it: seen successors carry
  // their own weight, every unseen id carries w0. Weights are relative to the
  // mode so they cannot overflow at small temperatures.
  const double log_ref = std::log(static_cast<double>(s->max_count) + alpha_);
  const double w0 = std::exp((std::log(alpha_) - log_ref) / temperature);
  auto weight = [&](std::uint32_t c) { return std::exp((std::log(static_cast<double>(c) + alpha_) - log_ref) / temperature); };

  double total = static_cast<double>(v - s->entries.size()) * w0;
  for (auto [id, c] : s->entries) total += weight(c);

  double u = rng.uniform() * total;
  std::uint64_t next_id = 0;
  auto in_gap = [&](std::uint64_t gap) -> std::optional<TokenId> {
    const double gap_w = static_cast<double>(gap) * w0;
    if (gap > 0 && gap_w > 0.0 && u < gap_w) {
      const auto off = std::min<std::uint64_t>(gap - 1, static_cast<std::uint64_t>(u / w0));
      return static_cast<TokenId>(next_id + off);
    }
    u -= gap_w;
    return std::nullopt;
  };
  for (auto [id, c] : s->entries) {
    if (auto hit = in_gap(id - next_id)) return *hit;
    const double w = weight(c);
    if (u < w) return id;
    u -= w;
    next_id = id + 1;
  }
  if (auto hit = in_gap(v - next_id)) return *hit;
  return s->entries.back().first;
}

NGramModel train_ngram(std::span<const TokenSeq> corpus, int order, double alpha, Vocab vocab) {
  if (order < 1 || order > NGramModel::kMaxOrder) {
    throw ConfigError("n-gram order must be in [1, " + std::to_string(NGramModel::kMaxOrder) + "], got " +
                      std::to_string(order));
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("smoothing alpha must be > 0");
  if (corpus.empty()) throw ConfigError("cannot train an n-gram model on an empty corpus");

  NGramModel m;
  m.order_ = order;
  m.alpha_ = alpha;
  m.vocab_ = std::move(vocab);

  std::unordered_map<NGramModel::Key, std::map<TokenId, std::uint32_t>, NGramModel::KeyHash> raw;
  const auto width = static_cast<std::size_t>(order - 1);
  TokenSeq padded;
  for (const auto& seq : corpus) {
    padded.assign(width, kBos);
    padded.insert(padded.end(), seq.begin(), seq.end());
    padded.push_back(kEos);
    for (std::size_t i = width; i < padded.size(); ++i) {
      if (padded[i] >= m.vocab_.size()) throw ConfigError("corpus token id outside vocabulary");
      auto key = m.make_key(std::span<const TokenId>(padded.data(), i));
      ++raw[key][padded[i]];
    }
  }
  m.table_.reserve(raw.size());
  for (auto& [key, succ] : raw) {
    NGramModel::Successors s;
    s.entries.assign(succ.begin(), succ.end());
    for (auto [id, c] : s.entries) {
      s.total += c;
      if (c > s.max_count) {
        s.max_count = c;
        s.argmax = id;
      }
    }
    m.table_.emplace(key, std::move(s));
  }
  return m;
}

NGramModel train_ngram_from_lines(std::span<const std::string> lines, int order, double alpha) {
  Vocab vocab = build_vocab(lines);
  std::vector<TokenSeq> corpus;
  corpus.reserve(lines.size());
  for (const auto& line : lines) corpus.push_back(tokenize(line, vocab));
  return train_ngram(corpus, order, alpha, std::move(vocab));
}

// Text format, version 1:
//   specleak-ngram 1
//   order <int>
//   alpha <hexfloat>
//   vocab <V>            followed by V lines, one word each, in id order
//   contexts <K>         followed by K lines:
//     <ctx ids (order-1 of them)> | <id>:<count> <id>:<count> ...
// Contexts are written in lexicographic id order so the file is canonical.
void NGramModel::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "order " << order_ << '\n';
  out << "alpha " << std::hexfloat << alpha_ << std::defaultfloat << '\n';
  out << "vocab " << vocab_.size() << '\n';
  for (const auto& w : vocab_.entries()) out << w << '\n';

  std::vector<const std::pair<const Key, Successors>*> rows;
  rows.reserve(table_.size());
  for (const auto& row : table_) rows.push_back(&row);
  std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->first.ids < b->first.ids; });

  const auto width = static_cast<std::size_t>(order_ - 1);
  out << "contexts " << rows.size() << '\n';
  for (const auto* row : rows) {
    for (std::size_t i = 0; i < width; ++i) out << row->first.ids[i] << ' ';
    out << '|';
    for (auto [id, c] : row->second.entries) out << ' ' << id << ':' << c;
    out << '\n';
  }
}

NGramModel NGramModel::load(std::istream& in, const std::string& source_name) {
  std::size_t lineno = 0;
  std::string line;
  auto next_line = [&]() -> std::string& {
    if (!std::getline(in, line)) throw ParseError(source_name, lineno + 1, "unexpected end of file");
    ++lineno;
    return line;
  };
  auto parse_uint = [&](const std::string& text) -> std::uint64_t {
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(text, &used);
    } catch (const std::logic_error&) {
      used = 0;
    }
    if (used != text.size() || text.empty() || text[0] == '-') {
      throw ParseError(source_name, lineno, "malformed number '" + text + "'");
    }
    return v;
  };
  auto expect_field = [&](std::string_view name) {
    std::istringstream ss(next_line());
    std::string key, value;
    ss >> key >> value;
    if (key != name || value.empty()) throw ParseError(source_name, lineno, "expected '" + std::string(name) + "'");
    return value;
  };

  {
    std::istringstream ss(next_line());
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (magic != kMagic) throw ParseError(source_name, lineno, "not a specleak n-gram model");
    if (version != kFormatVersion) {
      throw ParseError(source_name, lineno, "unsupported model format version " + std::to_string(version));
    }
  }

  NGramModel m;
  try {
    m.order_ = std::stoi(expect_field("order"));
    m.alpha_ = std::strtod(expect_field("alpha").c_str(), nullptr);
  } catch (const std::invalid_argument&) {
    throw ParseError(source_name, lineno, "malformed number");
  }
  if (m.order_ < 1 || m.order_ > kMaxOrder) throw ParseError(source_name, lineno, "order out of range");
  if (!(m.alpha_ > 0.0)) throw ParseError(source_name, lineno, "alpha must be > 0");

  const std::size_t vocab_size = parse_uint(expect_field("vocab"));
  for (std::size_t i = 0; i < vocab_size; ++i) {
    const std::string& w = next_line();
    if (i < kFirstWordId) {
      if (w != m.vocab_.word(static_cast<TokenId>(i))) throw ParseError(source_name, lineno, "reserved token mismatch");
      continue;
    }
    if (m.vocab_.add(w) != i) throw ParseError(source_name, lineno, "duplicate vocabulary entry '" + w + "'");
  }

  const std::size_t contexts = parse_uint(expect_field("contexts"));
  const auto width = static_cast<std::size_t>(m.order_ - 1);
  m.table_.reserve(contexts);
  for (std::size_t r = 0; r < contexts; ++r) {
    std::istringstream ss(next_line());
    Key key;
    for (std::size_t i = 0; i < width; ++i) {
      if (!(ss >> key.ids[i]) || key.ids[i] >= vocab_size) throw ParseError(source_name, lineno, "bad context id");
    }
    std::string tok;
    if (!(ss >> tok) || tok != "|") throw ParseError(source_name, lineno, "expected '|'");
    Successors s;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) throw ParseError(source_name, lineno, "expected id:count");
      const auto id = parse_uint(tok.substr(0, colon));
      const auto c = parse_uint(tok.substr(colon + 1));
      if (id >= vocab_size || c == 0 || c > UINT32_MAX) throw ParseError(source_name, lineno, "bad successor entry");
      if (!s.entries.empty() && s.entries.back().first >= id) throw ParseError(source_name, lineno, "unsorted successors");
      s.entries.emplace_back(static_cast<TokenId>(id), static_cast<std::uint32_t>(c));
      s.total += c;
      if (c > s.max_count) {
        s.max_count = static_cast<std::uint32_t>(c);
        s.argmax = static_cast<TokenId>(id);
      }
    }
    if (s.entries.empty()) throw ParseError(source_name, lineno, "context without successors");
    m.table_.emplace(key, std::move(s));
  }
  return m;
}

void NGramModel::save_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file " + path);
  save(out);
  if (!out) throw IoError("error while writing model file " + path);
}

NGramModel NGramModel::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path);
  return load(in, path);
}

}  // namespace specleak
