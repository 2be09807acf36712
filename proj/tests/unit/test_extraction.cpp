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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "bundled.hpp"
#include "doctest.h"
#include "specleak/error.hpp"
#include "specleak/extraction.hpp"

using namespace specleak;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("specleak_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

SessionConfig retrieval_session(const NGramModel& m, std::shared_ptr<const RetrievalDatastore> store, TokenSeq prompt,
                                std::size_t max_tokens) {
  SessionConfig s;
  s.model = &m;
  s.engine.kind = EngineKind::kRetrieval;
  s.engine.store = std::move(store);
  s.prompt = std::move(prompt);
  s.max_tokens = max_tokens;
  return s;
}

// Naive contiguous search, independent of the suffix array.
bool occurs_in(const std::vector<TokenSeq>& store, const TokenSeq& needle) {
  for (const auto& s : store) {
    if (s.size() < needle.size()) continue;
    for (std::size_t i = 0; i + needle.size() <= s.size(); ++i) {
      if (std::equal(needle.begin(), needle.end(), s.begin() + static_cast<std::ptrdiff_t>(i))) return true;
    }
  }
  return false;
}

std::shared_ptr<Wordlist> wordlist_of(const Vocab& v, std::vector<std::pair<std::string, double>> words) {
  auto wl = std::make_shared<Wordlist>();
  for (auto& [w, c] : words) {
    wl->ids.push_back(*v.find(w));
    wl->weights.push_back(c);
  }
  return wl;
}

}  // namespace

TEST_SUITE("extraction") {
  TEST_CASE("single-token iterations leak nothing") {
    const auto m = train_ngram_from_lines(std::vector<std::string>{"a b c d e f"}, 2, 1e-6);
    auto empty = std::make_shared<RetrievalDatastore>();
    const TokenSeq prompt = tokenize("a", m.vocab());
    const SessionLog log = serve(retrieval_session(m, empty, prompt, 10));
    REQUIRE(!log.iterations.empty());
    CHECK(std::all_of(log.token_counts.begin(), log.token_counts.end(), [](std::size_t c) { return c == 1; }));
    CHECK(detect_leaks(log, prompt).empty());
  }

  TEST_CASE("mitigated or non-retrieval sessions are rejected") {
    const auto m = train_ngram_from_lines(std::vector<std::string>{"a b c d e f"}, 2, 1e-6);
    auto store = std::make_shared<RetrievalDatastore>(std::vector<TokenSeq>{tokenize("a b c d", m.vocab())}, RetrievalParams{});
    auto s = retrieval_session(m, store, tokenize("a", m.vocab()), 10);
    s.policy = MitigationPolicy::constant(1024);
    CHECK_THROWS_AS(detect_leaks(serve(s)), ConfigError);
    s.policy = MitigationPolicy::aggregated(2);
    CHECK_THROWS_AS(detect_leaks(serve(s)), ConfigError);
    s.policy = MitigationPolicy::none();
    s.engine = EngineSpec{};
    CHECK_THROWS_AS(detect_leaks(serve(s)), ConfigError);
  }

  TEST_CASE("a store holding the oracle continuation leaks its blocks") {
    const std::vector<std::string> lines{"one two three four five six seven eight nine ten eleven twelve",
                                         "two three four nine ten"};
    const auto m = train_ngram_from_lines(lines, 3, 1e-6);
    const TokenSeq prompt = tokenize("one two", m.vocab());
    const TokenSeq cont = greedy_continuation(m, prompt, 20);
    REQUIRE(cont.size() >= 6);
    TokenSeq full = prompt;
    full.insert(full.end(), cont.begin(), cont.end());
    auto store = std::make_shared<RetrievalDatastore>(std::vector<TokenSeq>{full}, RetrievalParams{});

    const SessionLog log = serve(retrieval_session(m, store, prompt, 20));
    const auto leaks = detect_leaks(log, prompt);
    const std::set<Leak> found(leaks.begin(), leaks.end());

    std::size_t offset = 0, leaked_tokens = 0;
    TokenId prev = prompt.back();
    for (const auto& it : log.iterations) {
      if (it.speculated_accepted > 0) {
        const auto b = cont.begin() + static_cast<std::ptrdiff_t>(offset);
        Leak expect{prev, TokenSeq(b, b + static_cast<std::ptrdiff_t>(it.speculated_accepted))};
        CHECK(found.count(expect) == 1);
        leaked_tokens += it.speculated_accepted;
      }
      offset += it.tokens.size();
      prev = it.tokens.back();
    }
    CHECK(offset == cont.size());
    CHECK(leaked_tokens * 2 >= cont.size());
  }

  TEST_CASE("every leak occurs in the ground-truth store") {
    const auto& b = testing::bundled();
    auto store = std::make_shared<RetrievalDatastore>(
        load_datastore(testing::data_file("toy_store.txt"), b.model->vocab(), RetrievalParams{}));
    auto wl = std::make_shared<Wordlist>(Wordlist::load(testing::data_file("wordlist.txt"), b.model->vocab()));
    for (auto kind : {ExtractionStrategy::Kind::kRandom, ExtractionStrategy::Kind::kCommonWords,
                      ExtractionStrategy::Kind::kFeedbackReuse}) {
      ExtractionStrategy st;
      st.kind = kind;
      st.budget = 150;
      st.wordlist = wl;
      const LeakLedger ledger = run_extraction({b.model.get(), store, 32, 0.0}, st, 7);
      for (const auto& e : ledger.leaked) CHECK(occurs_in(store->sequences(), e.leak.tokens()));
      CHECK(ledger_soundness(ledger, *store) == 1.0);
      REQUIRE(ledger.timeline.size() == st.budget);
      CHECK(std::is_sorted(ledger.timeline.begin(), ledger.timeline.end()));
      CHECK(ledger.timeline.back() == ledger.unique());
      for (const auto& e : ledger.leaked) CHECK(ledger.timeline[e.first_query] >= 1);
    }
  }

  TEST_CASE("an empty store leaks nothing") {
    const auto& b = testing::bundled();
    ExtractionStrategy st;
    st.budget = 40;
    const LeakLedger ledger = run_extraction({b.model.get(), std::make_shared<RetrievalDatastore>(), 32, 0.0}, st, 1);
    CHECK(ledger.unique() == 0);
    CHECK(ledger.timeline == std::vector<std::size_t>(40, 0));
    CHECK(ledger_soundness(ledger, RetrievalDatastore{}) == 1.0);
  }

  TEST_CASE("exhaustive querying of a small store reaches every retrievable continuation") {
    // Ten sequences over disjoint words; an order-2 model trained on them
    // follows the store exactly, so every one-token context is retrievable.
    std::vector<std::string> lines;
    for (int s = 0; s < 10; ++s) {
      std::string line;
      for (int w = 0; w < 6; ++w) line += (w ? " s" : "s") + std::to_string(s) + "w" + std::to_string(w);
      lines.push_back(line);
    }
    const auto m = train_ngram_from_lines(lines, 2, 1e-6);
    std::vector<TokenSeq> seqs;
    for (const auto& l : lines) seqs.push_back(tokenize(l, m.vocab()));
    const RetrievalParams params{};
    auto store = std::make_shared<RetrievalDatastore>(seqs, params);

    std::set<Leak> oracle;
    for (const auto& s : seqs) {
      for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const std::size_t end = std::min(s.size(), i + 1 + params.draft_len);
        oracle.insert({s[i], TokenSeq(s.begin() + static_cast<std::ptrdiff_t>(i + 1), s.begin() + static_cast<std::ptrdiff_t>(end))});
      }
    }

    ExtractionStrategy st;
    st.kind = ExtractionStrategy::Kind::kRandom;
    st.tokens_per_query = 1;
    st.budget = 1000;
    const LeakLedger ledger = run_extraction({&m, store, 16, 0.0}, st, 3);
    std::set<Leak> got;
    for (const auto& e : ledger.leaked) got.insert(e.leak);
    CHECK(got == oracle);
  }

  TEST_CASE("random queries over a one-word vocabulary") {
    Vocab v;
    const TokenId a = v.add("a");
    ExtractionStrategy st;
    st.tokens_per_query = 5;
    QueryState state;
    CounterRng rng(1);
    CHECK(build_query(st, v, state, rng) == TokenSeq(5, a));
  }

  TEST_CASE("feedback reuse replays a leak verbatim, then falls back") {
    Vocab v;
    const TokenId x = v.add("x"), y = v.add("y"), z = v.add("z"), w = v.add("w");
    ExtractionStrategy st;
    st.kind = ExtractionStrategy::Kind::kFeedbackReuse;
    st.tokens_per_query = 3;
    st.wordlist = wordlist_of(v, {{"w", 1.0}});
    LeakLedger ledger;
    ledger.add({x, {y, z}}, 0);
    QueryState state{&ledger, 0};
    CounterRng rng(1);
    CHECK(build_query(st, v, state, rng) == TokenSeq{x, y, z});
    CHECK(build_query(st, v, state, rng) == TokenSeq{w, w, w});
    CHECK(!ledger.add({x, {y, z}}, 1));
    CHECK(ledger.add({x, {y}}, 1));
    CHECK(build_query(st, v, state, rng) == TokenSeq{x, y});
  }

  TEST_CASE("common-word draws follow the list's frequencies") {
    Vocab v;
    for (const char* w : {"the", "of", "and", "to"}) v.add(w);
    const std::string path = write_temp("wl_counts.txt", "the\t50\nof\t25\nand\t15\nto\t10\nzzz\t99\n");
    const Wordlist wl = Wordlist::load(path, v);
    CHECK(wl.skipped == 1);
    std::map<TokenId, double> freq;
    CounterRng rng(42);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) freq[wl.draw(rng)] += 1.0 / draws;
    const std::map<std::string, double> expect{{"the", 0.50}, {"of", 0.25}, {"and", 0.15}, {"to", 0.10}};
    for (const auto& [w, p] : expect) CHECK(std::abs(freq[*v.find(w)] - p) <= 0.05 * p);
  }

  TEST_CASE("word list loading") {
    Vocab v;
    for (const char* w : {"a", "b", "c"}) v.add(w);
    const Wordlist bare = Wordlist::load(write_temp("wl_bare.txt", "a\nb\n\nc\n"), v, 2);
    CHECK(bare.ids == std::vector<TokenId>{*v.find("a"), *v.find("b")});
    CHECK(bare.weights == std::vector<double>{1.0, 0.5});
    CHECK_THROWS_AS(Wordlist::load(write_temp("wl_bad.txt", "a\t12x\n"), v), ParseError);
    CHECK_THROWS_AS(Wordlist::load(write_temp("wl_none.txt", "q\nr\n"), v), ConfigError);
    CHECK_THROWS_AS(Wordlist::load("/nonexistent/wl.txt", v), IoError);
  }

  TEST_CASE("strategy names and validation") {
    using K = ExtractionStrategy::Kind;
    for (auto k : {K::kRandom, K::kCommonWords, K::kFeedbackReuse}) CHECK(parse_strategy(strategy_name(k)) == k);
    CHECK_THROWS_AS(parse_strategy("greedy"), ConfigError);
    ExtractionStrategy st;
    st.budget = 0;
    CHECK_THROWS_AS(st.validate(), ConfigError);
    st.budget = 1;
    st.kind = K::kCommonWords;
    CHECK_THROWS_AS(st.validate(), ConfigError);
  }

  TEST_CASE("ledger JSON") {
    Vocab v;
    const TokenId x = v.add("x"), y = v.add("y");
    LeakLedger ledger;
    ledger.add({x, {y, y}}, 3);
    ledger.timeline = {0, 0, 0, 1};
    const auto j = to_json(ledger, v);
    CHECK(j["unique"] == 1);
    CHECK(j["leaks"][0]["context"] == "x");
    CHECK(j["leaks"][0]["block"] == "y y");
    CHECK(j["leaks"][0]["first_query"] == 3);
  }
}
