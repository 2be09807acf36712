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
#include <map>
#include <set>

#include "specleak/error.hpp"
#include "specleak/probes.hpp"

namespace specleak {

StreamClient make_client(const NGramModel& model, EngineSpec engine, SamplerConfig sampler) {
  return [&model, engine = std::move(engine), sampler](const TokenSeq& prompt, std::size_t max_tokens) {
    SessionConfig s;
    s.model = &model;
    s.engine = engine;
    s.prompt = prompt;
    s.max_tokens = max_tokens;
    s.sampler = sampler;
    const SessionLog log = serve(s);
    std::vector<TokenSeq> out;
    out.reserve(log.iterations.size());
    for (const auto& it : log.iterations) out.push_back(it.tokens);
    return out;
  };
}

ProbeResult leak_n(const StreamClient& client, const TokenSeq& prompt, int n_upper) {
  if (n_upper < 2) throw ConfigError("n_upper must be >= 2");
  if (prompt.empty()) throw ConfigError("N probe needs a non-empty prompt");
  const auto blocks = client(prompt, std::max<std::size_t>(64, 8 * static_cast<std::size_t>(n_upper)));

  ProbeResult r;
  r.rule = "N = 1 + max tokens per iteration after the first multi-token iteration";
  for (const auto& b : blocks) r.evidence.push_back(b.size());
  const auto first_multi =
      std::find_if(r.evidence.begin(), r.evidence.end(), [](std::size_t c) { return c > 1; });
  if (first_multi == r.evidence.end()) return r;

  const std::size_t peak = *std::max_element(first_multi, r.evidence.end());
  const auto at_peak = std::count(first_multi, r.evidence.end(), peak);
  r.conclusive = true;
  r.recovered = static_cast<int>(peak) + 1;
  r.confidence = static_cast<double>(at_peak) / static_cast<double>(r.evidence.end() - first_multi);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

struct PhraseLine {
  int family;
  int p;
  std::string text;
  std::size_t lineno;
};

std::vector<PhraseLine> read_phrase_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open phrase file '" + path + "'");
  std::vector<PhraseLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw ParseError(path, lineno, "expected family<TAB>P<TAB>phrase");
    auto num = [&](std::string_view f) {
      int v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size() || v < 0) {
        throw ParseError(path, lineno, "bad number '" + std::string(f) + "'");
      }
      return v;
    };
    const std::string_view sv(line);
    out.push_back({num(sv.substr(0, t1)), num(sv.substr(t1 + 1, t2 - t1 - 1)), line.substr(t2 + 1), lineno});
  }
  return out;
}

}  // namespace

int phrase_families(const std::string& path) {
  std::set<int> fams;
  for (const auto& l : read_phrase_lines(path)) fams.insert(l.family);
  return static_cast<int>(fams.size());
}

PhraseSet load_phrase_set(const std::string& path, const Vocab& vocab, int family) {
  std::map<int, std::vector<TokenSeq>> by_p;
  PhraseSet set;
  bool have_key = false;
  for (const auto& l : read_phrase_lines(path)) {
    if (l.family != family) continue;
    TokenSeq phrase;
    try {
      phrase = tokenize(l.text, vocab, UnknownWords::kError);
    } catch (const Error& e) {
      throw ParseError(path, l.lineno, e.what());
    }
    if (phrase.size() < 2) throw ParseError(path, l.lineno, "phrase needs a key token and a successor");
    if (!have_key) {
      set.key = phrase[0];
      have_key = true;
    } else if (phrase[0] != set.key) {
      throw ParseError(path, l.lineno, "phrase does not start with the family's key token");
    }
    by_p[l.p].push_back(std::move(phrase));
  }
  if (by_p.empty()) throw ConfigError("phrase file '" + path + "' has no family " + std::to_string(family));
  int expect = 1;
  for (auto& [p, block] : by_p) {
    if (p != expect++) throw ConfigError("phrase family " + std::to_string(family) + " is missing P=" + std::to_string(expect - 1));
    if (static_cast<int>(block.size()) != p) {
      throw ConfigError("phrase family " + std::to_string(family) + " has " + std::to_string(block.size()) +
                        " phrases for P=" + std::to_string(p));
    }
    std::set<TokenId> successors;
    for (const auto& ph : block) successors.insert(ph[1]);
    if (successors.size() != block.size()) {
      throw ConfigError("phrases for P=" + std::to_string(p) + " share a post-key token");
    }
    set.blocks.push_back(std::move(block));
  }
  return set;
}

GProbeResult leak_g(const StreamClient& client, const PhraseSet& phrases, int g_upper) {
  if (g_upper < 1) throw ConfigError("g_upper must be >= 1");
  if (static_cast<int>(phrases.blocks.size()) < g_upper + 1) {
    throw ConfigError("G probe up to " + std::to_string(g_upper) + " needs phrase blocks for P = 1.." +
                      std::to_string(g_upper + 1) + ", have " + std::to_string(phrases.blocks.size()));
  }

  GProbeResult out;
  out.verdict.rule =
      "steady state = after every phrase appeared twice; post-key token alone in an iteration = mis-speculated; "
      "G = last P before the first P with mostly mis-speculated post-key tokens";
  for (int p = 1; p <= g_upper + 1; ++p) {
    const auto& block = phrases.blocks[static_cast<std::size_t>(p - 1)];
    std::size_t cycle = 0;
    for (const auto& ph : block) cycle += ph.size();
    const TokenSeq& prompt = block[0];
    const auto iters = client(prompt, cycle * 6);

    GProbePoint pt;
    pt.p = p;
    // Flatten the stream with the size of the iteration each output token came in.
    TokenSeq stream(prompt.begin(), prompt.end());
    std::vector<std::size_t> iter_size(prompt.size(), 0);
    for (const auto& b : iters) {
      pt.counts.push_back(b.size());
      stream.insert(stream.end(), b.begin(), b.end());
      iter_size.insert(iter_size.end(), b.size(), b.size());
    }

    std::map<TokenId, int> seen;  // post-key token -> appearances so far
    std::set<TokenId> successors;
    for (const auto& ph : block) successors.insert(ph[1]);
    bool steady = false;
    for (std::size_t i = 0; i + 1 < stream.size(); ++i) {
      if (stream[i] != phrases.key || !successors.count(stream[i + 1])) continue;
      const std::size_t pos = i + 1;
      if (steady && pos >= prompt.size()) {
        if (iter_size[pos] == 1) {
          ++pt.missed;
          pt.miss_positions.push_back(pos - prompt.size());
        } else {
          ++pt.correct;
        }
      }
      ++seen[stream[pos]];
      if (!steady && seen.size() == successors.size() &&
          std::all_of(seen.begin(), seen.end(), [](const auto& kv) { return kv.second >= 2; })) {
        steady = true;
      }
    }
    out.points.push_back(std::move(pt));
  }

  auto fails = [](const GProbePoint& pt) { return pt.correct + pt.missed == 0 || pt.missed > pt.correct; };
  const auto first_fail = std::find_if(out.points.begin(), out.points.end(), fails);
  if (first_fail == out.points.end() || first_fail == out.points.begin()) return out;

  ProbeResult& v = out.verdict;
  v.conclusive = true;
  v.recovered = first_fail->p - 1;
  v.evidence = first_fail->counts;
  std::size_t agree = 0, total = 0;
  for (auto it = out.points.begin(); it <= first_fail; ++it) {
    agree += it == first_fail ? it->missed : it->correct;
    total += it->correct + it->missed;
  }
  v.confidence = static_cast<double>(agree) / static_cast<double>(total);
  return out;
}

nlohmann::json to_json(const ProbeResult& r) {
  nlohmann::json j{{"conclusive", r.conclusive}, {"confidence", r.confidence}, {"rule", r.rule},
                   {"evidence", r.evidence}};
  j["recovered"] = r.conclusive ? nlohmann::json(r.recovered) : nlohmann::json(nullptr);
  return j;
}

nlohmann::json to_json(const GProbeResult& r) {
  nlohmann::json j = to_json(r.verdict);
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points) {
    pts.push_back({{"p", p.p},
                   {"correct", p.correct},
                   {"missed", p.missed},
                   {"counts", p.counts},
                   {"miss_positions", p.miss_positions}});
  }
  j["points"] = std::move(pts);
  return j;
}

}  // namespace specleak
