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

#include <filesystem>
#include <fstream>

#include "bundled.hpp"
#include "doctest.h"
#include "specleak/error.hpp"
#include "specleak/probes.hpp"

using namespace specleak;

namespace {

EngineSpec lookahead(int n, int g) {
  EngineSpec e;
  e.kind = EngineKind::kLookahead;
  e.lookahead = {n, g};
  return e;
}

StreamClient fixed_blocks(std::vector<std::size_t> sizes) {
  return [sizes](const TokenSeq&, std::size_t) {
    std::vector<TokenSeq> out;
    for (auto s : sizes) out.emplace_back(s, kFirstWordId);
    return out;
  };
}

PhraseSet bundled_phrases(int family) {
  return load_phrase_set(testing::data_file("gprobe_phrases.txt"), testing::bundled().model->vocab(), family);
}

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("specleak_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

}  // namespace

TEST_SUITE("probes") {
  TEST_CASE("leak_n recovers N on the repeated-token prompt") {
    const auto& b = testing::bundled();
    const TokenSeq prompt(3, *b.model->vocab().find("A"));
    for (int n : {4, 5, 6}) {
      const ProbeResult r = leak_n(make_client(*b.model, lookahead(n, 5), {0.0, 1}), prompt);
      CHECK(r.conclusive);
      CHECK(r.recovered == n);
      CHECK(r.confidence > 0.5);
    }
  }

  TEST_CASE("leak_n on an autoregressive target is inconclusive") {
    const auto& b = testing::bundled();
    const TokenSeq prompt(3, *b.model->vocab().find("A"));
    const ProbeResult r = leak_n(make_client(*b.model, EngineSpec{}, {0.0, 1}), prompt);
    CHECK(!r.conclusive);
    CHECK(to_json(r)["recovered"].is_null());
  }

  TEST_CASE("leak_n drops warm-up and scores the peak") {
    const ProbeResult r = leak_n(fixed_blocks({1, 1, 3, 2, 3, 1}), TokenSeq{kFirstWordId});
    CHECK(r.conclusive);
    CHECK(r.recovered == 4);
    CHECK(r.confidence == doctest::Approx(0.5));
    CHECK(r.evidence == std::vector<std::size_t>{1, 1, 3, 2, 3, 1});
    CHECK_THROWS_AS(leak_n(fixed_blocks({1}), TokenSeq{}), ConfigError);
  }

  TEST_CASE("leak_g recovers G = 3 with periodic misses at P = 4") {
    const auto& b = testing::bundled();
    const GProbeResult r = leak_g(make_client(*b.model, lookahead(4, 3), {0.0, 1}), bundled_phrases(0), 6);
    CHECK(r.verdict.conclusive);
    CHECK(r.verdict.recovered == 3);
    for (int p : {1, 2, 3}) {
      CHECK(r.points[p - 1].missed == 0);
      CHECK(r.points[p - 1].correct > 0);
    }
    const auto& pos = r.points[3].miss_positions;
    REQUIRE(pos.size() >= 3);
    CHECK(r.points[3].correct == 0);
    for (std::size_t i = 1; i < pos.size(); ++i) CHECK(pos[i] - pos[i - 1] == 7);
  }

  TEST_CASE("leak_g with G = 1 sustains the single phrase") {
    const auto& b = testing::bundled();
    const GProbeResult r = leak_g(make_client(*b.model, lookahead(4, 1), {0.0, 2}), bundled_phrases(1), 6);
    CHECK(r.verdict.recovered == 1);
    CHECK(r.points[0].missed == 0);
    CHECK(r.points[0].correct > 0);
  }

  TEST_CASE("leak_g against an autoregressive target is inconclusive") {
    const auto& b = testing::bundled();
    const GProbeResult r = leak_g(make_client(*b.model, EngineSpec{}, {0.0, 1}), bundled_phrases(0), 6);
    CHECK(!r.verdict.conclusive);
  }

  TEST_CASE("phrase sets") {
    CHECK(phrase_families(testing::data_file("gprobe_phrases.txt")) == 5);
    const PhraseSet s = bundled_phrases(2);
    REQUIRE(s.blocks.size() == 7);
    for (std::size_t p = 0; p < s.blocks.size(); ++p) {
      CHECK(s.blocks[p].size() == p + 1);
      for (const auto& ph : s.blocks[p]) CHECK(ph[0] == s.key);
    }
    CHECK_THROWS_AS(leak_g(fixed_blocks({1}), s, 7), ConfigError);

    Vocab v;
    for (const char* w : {"k", "a", "b", "c", "x"}) v.add(w);
    CHECK_NOTHROW(load_phrase_set(write_temp("ph_ok.txt", "0\t1\tk a\n0\t2\tk b\n0\t2\tk c\n"), v, 0));
    CHECK_THROWS_AS(load_phrase_set(write_temp("ph_key.txt", "0\t1\tk a\n0\t2\tx b\n0\t2\tk c\n"), v, 0), ParseError);
    CHECK_THROWS_AS(load_phrase_set(write_temp("ph_gap.txt", "0\t1\tk a\n0\t3\tk b\n0\t3\tk c\n0\t3\tk a\n"), v, 0),
                    ConfigError);
    CHECK_THROWS_AS(load_phrase_set(write_temp("ph_succ.txt", "0\t1\tk a\n0\t2\tk b\n0\t2\tk b\n"), v, 0), ConfigError);
    CHECK_THROWS_AS(load_phrase_set(write_temp("ph_fmt.txt", "0 1 k a\n"), v, 0), ParseError);
    CHECK_THROWS_AS(load_phrase_set(write_temp("ph_ok.txt", "0\t1\tk a\n"), v, 3), ConfigError);
  }
}
