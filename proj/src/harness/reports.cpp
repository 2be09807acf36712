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

#include <cstdio>
#include <sstream>

#include "specleak/error.hpp"
#include "specleak/harness.hpp"

namespace specleak::harness {

namespace {

std::shared_ptr<const NGramModel> load_model(const json& config) {
  const json& m = config.at("model");
  if (m.at("file").is_string()) {
    return std::make_shared<NGramModel>(NGramModel::load_file(data_path(config, m.at("file").get<std::string>())));
  }
  const auto lines = read_corpus_lines(data_path(config, m.at("corpus").get<std::string>()));
  return std::make_shared<NGramModel>(train_ngram_from_lines(lines, m.at("order").get<int>(), m.at("alpha").get<double>()));
}

RetrievalParams retrieval_params(const json& e) {
  RetrievalParams p;
  p.max_match_len = e.at("max_match_len").get<std::size_t>();
  p.top_k = e.at("top_k").get<std::size_t>();
  p.draft_len = e.at("draft_len").get<std::size_t>();
  return p;
}

std::vector<std::string> read_prompts(const json& config, const std::string& key) {
  return read_corpus_lines(data_path(config, config.at("fingerprint").at(key).get<std::string>()));
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

json envelope(std::string_view kind, const json& config, json results) {
  return {{"kind", kind}, {"config", config}, {"results", std::move(results)}};
}

}  // namespace

Bench load_bench(const json& config) {
  validate_config(config);
  Bench b;
  b.config = config;
  b.model = load_model(config);
  const json& e = config.at("engine");
  b.engine.kind = parse_engine_kind(e.at("type").get<std::string>());
  b.engine.lookahead = {e.at("n").get<int>(), e.at("g").get<int>()};
  if (b.engine.kind == EngineKind::kRetrieval) {
    b.engine.store = std::make_shared<RetrievalDatastore>(
        load_datastore(data_path(config, e.at("store").get<std::string>()), b.model->vocab(), retrieval_params(e)));
  }
  if (b.engine.kind == EngineKind::kDraftPair) {
    const auto lines = read_corpus_lines(data_path(config, config.at("model").at("corpus").get<std::string>()));
    b.engine.draft_model = std::make_shared<NGramModel>(
        train_ngram_from_lines(lines, e.at("draft_order").get<int>(), e.at("draft_alpha").get<double>()));
    b.engine.pair.draft_len = e.at("pair_draft_len").get<std::size_t>();
    b.engine.pair.fallback_threshold = e.at("fallback").get<double>();
    b.engine.pair.rollback_threshold = e.at("rollback").get<double>();
  }
  b.engine.validate();
  b.sampler = {config.at("sampler").at("temperature").get<double>(), config.at("sampler").at("seed").get<std::uint64_t>()};
  b.policy = MitigationPolicy::parse(config.at("mitigation").get<std::string>());
  b.max_tokens = config.at("session").at("max_tokens").get<std::size_t>();
  b.separator = config.at("session").at("separator").get<std::string>();
  b.workers = config.at("workers").get<unsigned>();
  return b;
}

ExperimentSpec experiment_spec(const Bench& b) {
  const json& c = b.config;
  const json& f = c.at("fingerprint");
  ExperimentSpec s;
  s.scenario = parse_scenario(f.at("scenario").get<std::string>());
  s.model = b.model.get();
  s.engine = b.engine;
  s.prompts = read_prompts(c, s.scenario == Scenario::kSimilarStructure ? "similar_prompts" : "prompts");
  if (s.scenario == Scenario::kApproximate) s.test_prompts = read_prompts(c, "rephrased_prompts");
  s.tpq = f.at("tpq").get<std::size_t>();
  s.test_traces = f.at("test_traces").get<std::size_t>();
  s.max_tokens = b.max_tokens;
  s.feature_len = f.at("feature_len").get<std::size_t>();
  s.temperature = b.sampler.temperature;
  s.seed = b.sampler.seed;
  s.policy = b.policy;
  s.separator = b.separator;
  s.forest = forest_config(c);
  s.shuffle_labels = f.at("shuffle_labels").get<bool>();
  s.workers = b.workers;
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------

json fingerprint_report(const json& config) {
  const Bench bench = load_bench(config);
  const ExperimentSpec base = experiment_spec(bench);
  const json& f = config.at("fingerprint");
  const bool confusion = f.at("include_confusion").get<bool>();
  const auto seeds = f.at("seeds").get<std::vector<std::uint64_t>>();

  json results;
  results["labels"] = base.prompts.size();
  results["chance"] = 1.0 / static_cast<double>(base.prompts.size());
  json runs = json::array();
  std::vector<double> acc, f1;
  for (auto seed : seeds) {
    ExperimentSpec s = base;
    s.seed = seed;
    const ExperimentReport r = run_experiment(s);
    json j = to_json(r, confusion);
    j["seed"] = seed;
    runs.push_back(std::move(j));
    acc.push_back(r.accuracy);
    f1.push_back(r.macro_f1);
  }
  results["runs"] = std::move(runs);
  results["mean_accuracy"] = mean(acc);
  results["mean_macro_f1"] = mean(f1);

  if (f.at("sweep").at("enabled").get<bool>()) {
    json grid = json::array();
    for (const auto& tpq : f.at("sweep").at("tpq")) {
      for (const auto& temp : f.at("sweep").at("temperature")) {
        std::vector<double> a, g;
        for (auto seed : seeds) {
          ExperimentSpec s = base;
          s.seed = seed;
          s.tpq = tpq.get<std::size_t>();
          s.temperature = temp.get<double>();
          const ExperimentReport r = run_experiment(s);
          a.push_back(r.accuracy);
          g.push_back(r.macro_f1);
        }
        grid.push_back({{"tpq", tpq}, {"temperature", temp}, {"accuracy", mean(a)}, {"macro_f1", mean(g)}});
      }
    }
    results["grid"] = std::move(grid);
  }
  return envelope("fingerprint", config, std::move(results));
}

json mitigation_report(const json& config) {
  const Bench bench = load_bench(config);
  ExperimentSpec base = experiment_spec(bench);
  const json& ms = config.at("mitigation_sweep");
  base.temperature = ms.at("temperature").get<double>();
  const auto seeds = ms.at("seeds").get<std::vector<std::uint64_t>>();

  std::vector<std::pair<std::string, MitigationPolicy>> points{{"none", MitigationPolicy::none()}};
  for (const auto& v : ms.at("constant")) points.emplace_back("constant", MitigationPolicy::constant(v.get<std::uint32_t>()));
  for (const auto& v : ms.at("variable")) points.emplace_back("variable", MitigationPolicy::variable(v.get<std::uint32_t>()));
  for (const auto& v : ms.at("aggregate")) points.emplace_back("aggregate", MitigationPolicy::aggregated(v.get<std::size_t>()));

  json rows = json::array();
  for (const auto& [family, policy] : points) {
    std::vector<double> acc, over;
    for (auto seed : seeds) {
      ExperimentSpec s = base;
      s.seed = seed;
      s.policy = policy;
      const ExperimentReport r = run_experiment(s);
      acc.push_back(r.accuracy);
      over.push_back(r.overhead);
    }
    json row{{"family", family},  {"policy", policy.describe()}, {"accuracy", acc},
             {"mean_accuracy", mean(acc)}, {"overhead", over}, {"mean_overhead", mean(over)}};
    if (family == "constant") row["param"] = policy.target_size;
    if (family == "variable") row["param"] = policy.max_pad;
    if (family == "aggregate") row["param"] = policy.aggregate;
    rows.push_back(std::move(row));
  }
  json results{{"rows", std::move(rows)},
               {"chance", 1.0 / static_cast<double>(base.prompts.size())},
               {"temperature", base.temperature}};
  return envelope("mitigation_sweep", config, std::move(results));
}

json extraction_report(const json& config) {
  validate_config(config);
  const auto model = load_model(config);
  const json& x = config.at("extraction");
  auto store = std::make_shared<RetrievalDatastore>(load_datastore(
      data_path(config, x.at("store").get<std::string>()), model->vocab(), retrieval_params(config.at("engine"))));
  auto wordlist = std::make_shared<Wordlist>(
      Wordlist::load(data_path(config, x.at("wordlist").get<std::string>()), model->vocab(), x.at("top_words").get<std::size_t>()));

  ExtractionTarget target{model.get(), store, x.at("max_tokens").get<std::size_t>(), x.at("temperature").get<double>()};
  const auto seeds = x.at("seeds").get<std::vector<std::uint64_t>>();
  const bool include_leaks = x.at("include_leaks").get<bool>();

  json strategies = json::object();
  for (const auto& name : x.at("strategies")) {
    ExtractionStrategy st;
    st.kind = parse_strategy(name.get<std::string>());
    st.budget = x.at("budget").get<std::size_t>();
    st.tokens_per_query = x.at("tokens_per_query").get<std::size_t>();
    st.wordlist = wordlist;
    st.validate();

    json runs = json::array();
    std::vector<double> timeline(st.budget, 0.0);
    std::vector<double> unique;
    double sound_min = 1.0;
    for (auto seed : seeds) {
      const LeakLedger ledger = run_extraction(target, st, seed);
      const double sound = ledger_soundness(ledger, *store);
      sound_min = std::min(sound_min, sound);
      for (std::size_t q = 0; q < st.budget; ++q) timeline[q] += static_cast<double>(ledger.timeline[q]);
      unique.push_back(static_cast<double>(ledger.unique()));
      json run{{"seed", seed}, {"unique", ledger.unique()}, {"soundness", sound}};
      if (include_leaks) run["leaks"] = to_json(ledger, model->vocab())["leaks"];
      runs.push_back(std::move(run));
    }
    for (auto& v : timeline) v /= static_cast<double>(seeds.size());
    strategies[name.get<std::string>()] = {
        {"runs", std::move(runs)}, {"mean_unique", mean(unique)}, {"min_soundness", sound_min}, {"mean_timeline", timeline}};
  }
  json results{{"strategies", std::move(strategies)},
               {"store_sequences", store->sequences().size()},
               {"unique_sequence", "distinct (context token, accepted block) pairs"},
               {"wordlist_skipped", wordlist->skipped}};
  return envelope("extraction", config, std::move(results));
}

json probe_n_report(const json& config) {
  const Bench bench = load_bench(config);
  const json& p = config.at("probe");
  const std::string token = p.at("token").get<std::string>();
  const auto id = bench.model->vocab().find(token);
  if (!id) throw ConfigError("probe token '" + token + "' is not in the model vocabulary");
  const double temp = p.at("temperature").get<double>();
  const int n_upper = p.at("n_upper").get<int>();

  json rows = json::array();
  bool all_exact = true;
  for (const auto& nv : p.at("n_values")) {
    const int n = nv.get<int>();
    for (const auto& sv : p.at("seeds")) {
      const auto seed = sv.get<std::uint64_t>();
      EngineSpec engine;
      engine.kind = EngineKind::kLookahead;
      engine.lookahead = {n, bench.engine.lookahead.g};
      const TokenSeq prompt(1 + seed % 5, *id);
      const ProbeResult r = leak_n(make_client(*bench.model, engine, {temp, derive_seed(seed, n)}), prompt, n_upper);
      const bool exact = r.conclusive && r.recovered == n;
      all_exact = all_exact && exact;
      json row = to_json(r);
      row["configured"] = n;
      row["seed"] = seed;
      row["exact"] = exact;
      rows.push_back(std::move(row));
    }
  }
  return envelope("probe_n", config, {{"probes", std::move(rows)}, {"all_exact", all_exact}});
}

json probe_g_report(const json& config) {
  const Bench bench = load_bench(config);
  const json& p = config.at("probe");
  const std::string phrases = data_path(config, p.at("phrases").get<std::string>());
  const int families = phrase_families(phrases);
  const double temp = p.at("temperature").get<double>();
  const int g_upper = p.at("g_upper").get<int>();
  const int n = p.at("g_probe_n").get<int>();

  json rows = json::array();
  bool all_exact = true;
  for (const auto& gv : p.at("g_values")) {
    const int g = gv.get<int>();
    for (const auto& sv : p.at("seeds")) {
      const auto seed = sv.get<std::uint64_t>();
      const int family = static_cast<int>(seed % static_cast<std::uint64_t>(families));
      const PhraseSet set = load_phrase_set(phrases, bench.model->vocab(), family);
      EngineSpec engine;
      engine.kind = EngineKind::kLookahead;
      engine.lookahead = {n, g};
      const GProbeResult r = leak_g(make_client(*bench.model, engine, {temp, derive_seed(seed, g)}), set, g_upper);
      const bool exact = r.verdict.conclusive && r.verdict.recovered == g;
      all_exact = all_exact && exact;
      json row = to_json(r);
      row["configured"] = g;
      row["seed"] = seed;
      row["family"] = family;
      row["exact"] = exact;
      rows.push_back(std::move(row));
    }
  }
  return envelope("probe_g", config, {{"probes", std::move(rows)}, {"all_exact", all_exact}, {"engine_n", n}});
}

json run_report(std::string_view kind, const json& config) {
  if (kind == "fingerprint") return fingerprint_report(config);
  if (kind == "mitigation_sweep") return mitigation_report(config);
  if (kind == "extraction") return extraction_report(config);
  if (kind == "probe_n") return probe_n_report(config);
  if (kind == "probe_g") return probe_g_report(config);
  throw ConfigError("unknown report kind '" + std::string(kind) + "'");
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string report_csv(const json& report) {
  const std::string kind = report.at("kind").get<std::string>();
  const json& r = report.at("results");
  std::ostringstream out;
  if (kind == "fingerprint") {
    out << "seed,accuracy,macro_f1\n";
    for (const auto& run : r.at("runs")) {
      out << run.at("seed").get<std::uint64_t>() << ',' << num(run.at("accuracy")) << ',' << num(run.at("macro_f1")) << '\n';
    }
    if (r.contains("grid")) {
      out << "\ntpq,temperature,accuracy,macro_f1\n";
      for (const auto& g : r.at("grid")) {
        out << g.at("tpq").get<std::uint64_t>() << ',' << num(g.at("temperature")) << ',' << num(g.at("accuracy")) << ','
            << num(g.at("macro_f1")) << '\n';
      }
    }
  } else if (kind == "mitigation_sweep") {
    out << "policy,mean_accuracy,mean_overhead\n";
    for (const auto& row : r.at("rows")) {
      out << row.at("policy").get<std::string>() << ',' << num(row.at("mean_accuracy")) << ','
          << num(row.at("mean_overhead")) << '\n';
    }
  } else if (kind == "extraction") {
    std::vector<std::string> names;
    for (const auto& [name, _] : r.at("strategies").items()) names.push_back(name);
    out << "query";
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    const std::size_t budget = r.at("strategies").at(names.front()).at("mean_timeline").size();
    for (std::size_t q = 0; q < budget; ++q) {
      out << q + 1;
      for (const auto& n : names) out << ',' << num(r.at("strategies").at(n).at("mean_timeline").at(q));
      out << '\n';
    }
  } else if (kind == "probe_n" || kind == "probe_g") {
    out << "configured,seed,recovered,confidence\n";
    for (const auto& p : r.at("probes")) {
      out << p.at("configured").get<int>() << ',' << p.at("seed").get<std::uint64_t>() << ','
          << (p.at("recovered").is_null() ? std::string("") : std::to_string(p.at("recovered").get<int>())) << ','
          << num(p.at("confidence")) << '\n';
    }
  }
  return out.str();
}

}  // namespace specleak::harness
