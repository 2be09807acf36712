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

#include <set>

#include "bundled.hpp"
#include "doctest.h"
#include "specleak/error.hpp"
#include "specleak/fingerprint.hpp"

using namespace specleak;

namespace {

ExperimentSpec base_spec() {
  ExperimentSpec s = harness::experiment_spec(testing::bundled());
  s.forest.n_trees = 40;
  return s;
}

double mean_accuracy(ExperimentSpec s, std::initializer_list<std::uint64_t> seeds) {
  double sum = 0.0;
  for (auto seed : seeds) {
    s.seed = seed;
    sum += run_experiment(s).accuracy;
  }
  return sum / static_cast<double>(seeds.size());
}

}  // namespace

TEST_SUITE("fingerprint") {
  TEST_CASE("benchmark prompts produce distinct temperature-0 traces") {
    const ExperimentSpec s = base_spec();
    const auto traces = collect_traces(s, s.prompts, 1, 0);
    REQUIRE(traces.size() == 50);
    std::size_t distinct = 0, pairs = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
      for (std::size_t j = i + 1; j < traces.size(); ++j) {
        ++pairs;
        distinct += traces[i].trace.sizes() != traces[j].trace.sizes();
      }
    }
    CHECK(distinct * 10 > pairs * 9);
  }

  TEST_CASE("exact scenario at temperature 0 is perfect for every engine") {
    for (const char* engine : {"lookahead", "retrieval", "draft_pair"}) {
      CAPTURE(engine);
      harness::json c = testing::bundled_config();
      c["engine"]["type"] = engine;
      const harness::Bench bench = harness::load_bench(c);
      ExperimentSpec s = harness::experiment_spec(bench);
      s.forest.n_trees = 40;
      const ExperimentReport r = run_experiment(s);
      CHECK(r.accuracy == 1.0);
      CHECK(r.macro_f1 == 1.0);
      CHECK(r.test_traces == 250);
    }
  }

  TEST_CASE("rephrasings with the same responses score like the exact scenario") {
    ExperimentSpec exact = base_spec();
    exact.temperature = 0.6;
    ExperimentSpec approx = exact;
    approx.scenario = Scenario::kApproximate;
    approx.test_prompts = approx.prompts;
    CHECK(run_experiment(approx).accuracy == run_experiment(exact).accuracy);
    approx.test_prompts.clear();
    CHECK_THROWS_AS(run_experiment(approx), ConfigError);
  }

  TEST_CASE("shuffled labels stay near chance") {
    ExperimentSpec s = base_spec();
    s.shuffle_labels = true;
    CHECK(run_experiment(s).accuracy <= 0.06);
  }

  TEST_CASE("seeded and worker-count independent") {
    ExperimentSpec s = base_spec();
    s.temperature = 0.8;
    s.seed = 9;
    const auto a = to_json(run_experiment(s));
    s.workers = 3;
    CHECK(to_json(run_experiment(s)) == a);
    CHECK(a.contains("confusion"));
    CHECK(!to_json(run_experiment(s), false).contains("confusion"));
  }

  TEST_CASE("accuracy is non-decreasing in TPQ") {
    ExperimentSpec s = base_spec();
    s.temperature = 0.8;
    double prev = 0.0;
    for (std::size_t tpq : {5, 10, 20, 30}) {
      s.tpq = tpq;
      const double acc = mean_accuracy(s, {1, 2, 3, 4, 5});
      CAPTURE(tpq);
      CHECK(acc >= prev);
      prev = acc;
    }
  }

  TEST_CASE("draft-pair accuracy does not rise with temperature") {
    harness::json c = testing::bundled_config();
    c["engine"]["type"] = "draft_pair";
    const harness::Bench bench = harness::load_bench(c);
    ExperimentSpec s = harness::experiment_spec(bench);
    s.forest.n_trees = 40;
    s.temperature = 0.3;
    const double cool = mean_accuracy(s, {1, 2, 3, 4, 5});
    s.temperature = 1.0;
    CHECK(mean_accuracy(s, {1, 2, 3, 4, 5}) <= cool);
  }

  TEST_CASE("scenario names") {
    for (auto sc : {Scenario::kExact, Scenario::kSimilarStructure, Scenario::kApproximate}) {
      CHECK(parse_scenario(scenario_name(sc)) == sc);
    }
    CHECK_THROWS_AS(parse_scenario("partial"), ConfigError);
  }
}
