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

// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Reports built here are kept and regenerated from their echoed
// configs at the end for the determinism check.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "specleak/harness.hpp"

using namespace specleak;
using harness::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::vector<json> g_reports;

json base_config() {
  json c = harness::default_config();
  c["data_dir"] = SPECLEAK_TEST_DATA_DIR;
  return c;
}

json keep(json report) {
  g_reports.push_back(report);
  return report;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string join(const std::vector<double>& v, const char* f = "%.3f") {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : "/") + fmt(f, x);
  return s;
}

// Mean accuracies across a family of mitigation rows, in config order.
std::vector<double> column(const json& rows, const std::string& family, const char* key) {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.at("family") == family) out.push_back(r.at(key).get<double>());
  }
  return out;
}

// Non-increasing, except one adjacent rise of at most `slack`.
bool nearly_non_increasing(const std::vector<double>& v, double slack) {
  int rises = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double up = v[i] - v[i - 1];
    if (up > slack) return false;
    if (up > 0.0) ++rises;
  }
  return rises <= 1;
}

Outcome losslessness() {
  const harness::Bench bench = harness::load_bench(base_config());
  const auto lines = read_corpus_lines(std::string(SPECLEAK_TEST_DATA_DIR) + "/toy_corpus.txt");
  json rc = base_config();
  rc["engine"]["type"] = "retrieval";
  const harness::Bench rbench = harness::load_bench(rc);

  std::size_t mismatches = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CounterRng rng(derive_seed(seed, 0x1055));
    const TokenSeq line = tokenize(lines[rng.below(lines.size())], bench.model->vocab());
    const std::size_t start = rng.below(line.size());
    const std::size_t len = 1 + rng.below(std::min<std::size_t>(10, line.size() - start));
    const TokenSeq prompt(line.begin() + static_cast<std::ptrdiff_t>(start),
                          line.begin() + static_cast<std::ptrdiff_t>(start + len));
    const SamplerConfig sc{0.0, seed};
    const TokenSeq ar = concat_tokens(decode_autoregressive(*bench.model, prompt, 320, sc));
    const TokenSeq la = concat_tokens(run_engine(bench.engine, *bench.model, prompt, 320, sc));
    const TokenSeq re = concat_tokens(run_engine(rbench.engine, *bench.model, prompt, 320, sc));
    if (detokenize(la, bench.model->vocab()) != detokenize(ar, bench.model->vocab())) ++mismatches;
    if (detokenize(re, bench.model->vocab()) != detokenize(ar, bench.model->vocab())) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatching outputs of 200"};
}

Outcome n_probe() {
  const json report = keep(harness::probe_n_report(base_config()));
  std::size_t exact = 0, total = 0, over = 0;
  for (const auto& p : report.at("results").at("probes")) {
    ++total;
    if (p.at("exact").get<bool>()) ++exact;
    const int n = p.at("configured").get<int>();
    for (const auto& c : p.at("evidence")) over += c.get<int>() > n - 1;
  }

  // The bound on ordinary traffic as well: every benchmark prompt, every N.
  const harness::Bench bench = harness::load_bench(base_config());
  const auto prompts = read_corpus_lines(std::string(SPECLEAK_TEST_DATA_DIR) + "/prompts_exp1.txt");
  for (int n = 3; n <= 8; ++n) {
    EngineSpec e;
    e.kind = EngineKind::kLookahead;
    e.lookahead = {n, 5};
    for (const auto& text : prompts) {
      for (const auto& it : run_engine(e, *bench.model, tokenize(text, bench.model->vocab()), 320, {0.0, 1})) {
        over += it.tokens.size() > static_cast<std::size_t>(n - 1);
      }
    }
  }
  return {exact == total && total == 30 && over == 0,
          std::to_string(exact) + "/" + std::to_string(total) + " exact, " + std::to_string(over) +
              " iterations over N-1"};
}

Outcome g_probe() {
  const json report = keep(harness::probe_g_report(base_config()));
  std::size_t exact = 0, total = 0, periodic = 0, g3 = 0;
  for (const auto& p : report.at("results").at("probes")) {
    ++total;
    if (p.at("exact").get<bool>()) ++exact;
    if (p.at("configured").get<int>() != 3) continue;
    ++g3;
    for (const auto& pt : p.at("points")) {
      if (pt.at("p").get<int>() != 4) continue;
      const auto pos = pt.at("miss_positions").get<std::vector<std::size_t>>();
      bool ok = pos.size() >= 3;
      for (std::size_t i = 1; i < pos.size(); ++i) ok = ok && pos[i] - pos[i - 1] == 7;
      periodic += ok;
    }
  }
  return {exact == total && total == 30 && periodic == g3 && g3 == 5,
          std::to_string(exact) + "/" + std::to_string(total) + " exact, period 7 at G=3 P=4 in " +
              std::to_string(periodic) + "/" + std::to_string(g3) + " runs"};
}

Outcome extraction() {
  const json report = keep(harness::extraction_report(base_config()));
  const json& s = report.at("results").at("strategies");
  double sound = 1.0;
  for (const auto& [_, v] : s.items()) sound = std::min(sound, v.at("min_soundness").get<double>());
  const double fr = s.at("feedback_reuse").at("mean_unique").get<double>();
  const double cw = s.at("common_words").at("mean_unique").get<double>();
  const double rn = s.at("random").at("mean_unique").get<double>();
  const bool store200 = report.at("results").at("store_sequences").get<std::size_t>() == 200;
  return {sound == 1.0 && fr >= cw && cw >= rn && store200,
          "soundness " + fmt("%.3f", sound) + ", mean unique feedback_reuse/common_words/random = " +
              join({fr, cw, rn}, "%.2f")};
}

Outcome ceiling_and_floor() {
  const json exact = keep(harness::fingerprint_report(base_config()));
  json c = base_config();
  c["fingerprint"]["shuffle_labels"] = true;
  const json shuffled = keep(harness::fingerprint_report(c));
  const double a = exact.at("results").at("mean_accuracy").get<double>();
  const double b = shuffled.at("results").at("mean_accuracy").get<double>();
  const bool fifty = exact.at("results").at("labels").get<int>() == 50;
  return {a == 1.0 && b <= 0.06 && fifty, "exact " + fmt("%.4f", a) + ", shuffled " + fmt("%.4f", b)};
}

Outcome temperature_trend() {
  std::vector<double> acc;
  for (double t : {0.3, 1.0}) {
    json c = base_config();
    c["sampler"]["temperature"] = t;
    c["fingerprint"]["seeds"] = {1, 2, 3, 4, 5};
    c["fingerprint"]["include_confusion"] = false;
    acc.push_back(keep(harness::fingerprint_report(c)).at("results").at("mean_accuracy").get<double>());
  }
  return {acc[1] <= acc[0], "accuracy at t=0.3/1.0 = " + join(acc, "%.4f")};
}

json g_mitigation;

const json& mitigation() {
  if (g_mitigation.is_null()) g_mitigation = keep(harness::mitigation_report(base_config()));
  return g_mitigation;
}

Outcome constant_padding() {
  const json& rows = mitigation().at("results").at("rows");
  const auto acc = column(rows, "constant", "mean_accuracy");
  const auto over = column(rows, "constant", "mean_overhead");
  const bool ok = acc.size() == 1 && acc[0] <= 2.0 / 50.0;
  return {ok, "constant:1024 accuracy " + join(acc, "%.4f") + ", overhead " + join(over, "%.1f")};
}

Outcome variable_and_aggregate() {
  const json& rows = mitigation().at("results").at("rows");
  const auto var = column(rows, "variable", "mean_accuracy");
  const auto var_over = column(rows, "variable", "mean_overhead");
  const auto agg = column(rows, "aggregate", "mean_accuracy");
  const bool overhead_up = std::is_sorted(var_over.begin(), var_over.end(), std::less_equal<>()) &&
                           std::adjacent_find(var_over.begin(), var_over.end()) == var_over.end();
  const bool ok = var.size() == 5 && agg.size() == 5 && nearly_non_increasing(var, 0.01) &&
                  nearly_non_increasing(agg, 0.01) && overhead_up;
  return {ok, "D: " + join(var) + " (overhead " + join(var_over, "%.2f") + "); k: " + join(agg)};
}

Outcome packet_size_proxy() {
  const harness::Bench bench = harness::load_bench(base_config());
  const auto prompts = read_corpus_lines(std::string(SPECLEAK_TEST_DATA_DIR) + "/prompts_exp1.txt");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    SessionConfig sc;
    sc.model = bench.model.get();
    sc.engine = bench.engine;
    sc.prompt = tokenize(prompts[i], bench.model->vocab());
    sc.max_tokens = bench.max_tokens;
    sc.sampler = {0.0, i};
    const SessionLog log = serve(sc);
    for (std::size_t k = 0; k < log.packets.size(); ++k) {
      x.push_back(log.packets[k].size());
      y.push_back(static_cast<double>(log.token_counts[k]));
    }
  }
  // Two-pass Pearson, independent of the library's moment kernels.
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return {r >= 0.9, "r = " + fmt("%.4f", r) + " over " + std::to_string(x.size()) + " packets"};
}

Outcome determinism() {
  std::size_t same = 0;
  for (const auto& r : g_reports) {
    const json again = harness::run_report(r.at("kind").get<std::string>(), r.at("config"));
    same += harness::dump(again) == harness::dump(r);
  }
  return {same == g_reports.size() && !g_reports.empty(),
          std::to_string(same) + "/" + std::to_string(g_reports.size()) + " reports regenerated identically"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    Outcome (*run)();
  };
  // Criterion 10 has no limit of its own; it reruns everything above.
  const Criterion criteria[] = {
      {1, "losslessness", 10, losslessness},
      {2, "N bound and N probe", 30, n_probe},
      {3, "G probe", 60, g_probe},
      {4, "extraction soundness and ordering", 300, extraction},
      {5, "fingerprint ceiling and floor", 300, ceiling_and_floor},
      {6, "temperature trend", 600, temperature_trend},
      {7, "constant padding", 300, constant_padding},
      {8, "variable padding and aggregation", 900, variable_and_aggregate},
      {9, "packet size proxy", 60, packet_size_proxy},
      {10, "determinism", 1e9, determinism},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    if (!in_time) o.detail += ", over the time limit";
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("criterion %2d %s: %s (%s; %.1f s)\n", c.id, c.name, pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
