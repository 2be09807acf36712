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
#include <mutex>
#include <thread>

#include "specleak/error.hpp"
#include "specleak/fingerprint.hpp"

namespace specleak {

std::string_view scenario_name(Scenario s) {
  switch (s) {
    case Scenario::kExact:
      return "exact";
    case Scenario::kSimilarStructure:
      return "similar-structure";
    case Scenario::kApproximate:
      return "approximate";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  for (auto s : {Scenario::kExact, Scenario::kSimilarStructure, Scenario::kApproximate}) {
    if (scenario_name(s) == name) return s;
  }
  throw ConfigError("unknown scenario '" + std::string(name) + "'");
}

void ExperimentSpec::validate() const {
  if (model == nullptr) throw ConfigError("experiment needs a target model");
  if (prompts.size() < 2) throw ConfigError("fingerprinting needs at least two prompts");
  if (tpq < 1) throw ConfigError("tpq must be >= 1");
  if (test_traces < 1) throw ConfigError("test_traces must be >= 1");
  if (max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (feature_len < 1) throw ConfigError("feature_len must be >= 1");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
  if (scenario == Scenario::kApproximate) {
    if (test_prompts.empty()) throw ConfigError("approximate scenario needs a rephrased prompt file");
    if (test_prompts.size() != prompts.size()) {
      throw ConfigError("rephrased prompt file has " + std::to_string(test_prompts.size()) + " prompts, expected " +
                        std::to_string(prompts.size()));
    }
  }
  engine.validate();
  policy.validate();
  forest.validate();
}

std::vector<LabeledTrace> collect_traces(const ExperimentSpec& spec, std::span<const std::string> prompts,
                                         std::size_t per_prompt, std::uint64_t phase) {
  const std::size_t total = prompts.size() * per_prompt;
  std::vector<LabeledTrace> out(total);
  std::vector<TokenSeq> tokenized;
  for (const auto& p : prompts) tokenized.push_back(tokenize(p, spec.model->vocab(), UnknownWords::kMapToUnk));

  auto run_one = [&](std::size_t k) {
    const auto label = static_cast<std::uint32_t>(k / per_prompt);
    const std::size_t rep = k % per_prompt;
    SessionConfig s;
    s.model = spec.model;
    s.engine = spec.engine;
    s.prompt = tokenized[label];
    s.max_tokens = spec.max_tokens;
    const std::uint64_t session_seed = derive_seed(spec.seed, label, rep, phase);
    s.sampler = {spec.temperature, session_seed};
    s.policy = spec.policy;
    s.policy.seed = derive_seed(session_seed, 0x9AD);
    s.separator = spec.separator;
    const SessionLog log = serve(s);
    out[k].label = label;
    out[k].trace = observe(log);
    out[k].trace.label = std::to_string(label);
    out[k].trace.id = std::to_string(phase) + "-" + std::to_string(label) + "-" + std::to_string(rep);
    out[k].payload_bytes = log.payload_bytes();
  };

  const unsigned workers = std::max(1u, spec.workers);
  if (workers == 1) {
    for (std::size_t k = 0; k < total; ++k) run_one(k);
  } else {
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex mu;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t k = w; k < total; k += workers) run_one(k);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  return out;
}

double confusion_accuracy(const std::vector<std::vector<std::uint32_t>>& confusion) {
  std::uint64_t right = 0, all = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) {
    for (std::size_t j = 0; j < confusion[i].size(); ++j) {
      all += confusion[i][j];
      if (i == j) right += confusion[i][j];
    }
  }
  return all == 0 ? 0.0 : static_cast<double>(right) / static_cast<double>(all);
}

double confusion_macro_f1(const std::vector<std::vector<std::uint32_t>>& confusion) {
  const std::size_t k = confusion.size();
  if (k == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    double tp = confusion[c][c], fp = 0, fn = 0;
    for (std::size_t o = 0; o < k; ++o) {
      if (o == c) continue;
      fp += confusion[o][c];
      fn += confusion[c][o];
    }
    sum += tp == 0 ? 0.0 : 2 * tp / (2 * tp + fp + fn);
  }
  return sum / static_cast<double>(k);
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto train = collect_traces(spec, spec.prompts, spec.tpq, 0);
  const auto& test_prompts = spec.scenario == Scenario::kApproximate ? spec.test_prompts : spec.prompts;
  const auto test = collect_traces(spec, test_prompts, spec.test_traces, 1);

  LabeledDataset ds;
  ds.num_labels = spec.prompts.size();
  for (const auto& t : train) ds.add(featurize(t.trace, spec.feature_len), t.label);
  if (spec.shuffle_labels) {
    CounterRng rng(derive_seed(spec.seed, 0x5E0F));
    for (std::size_t i = ds.labels.size(); i > 1; --i) std::swap(ds.labels[i - 1], ds.labels[rng.below(i)]);
  }
  ForestConfig fc = spec.forest;
  fc.seed = derive_seed(spec.seed, 0xF0E5, fc.seed);
  const ForestModel model = train_forest(ds, fc);

  ExperimentReport r;
  r.scenario = spec.scenario;
  r.confusion.assign(ds.num_labels, std::vector<std::uint32_t>(ds.num_labels));
  double votes = 0.0;
  for (const auto& t : test) {
    const Prediction p = model.predict(featurize(t.trace, spec.feature_len));
    ++r.confusion[t.label][p.label];
    votes += p.vote_fraction;
  }
  r.accuracy = confusion_accuracy(r.confusion);
  r.macro_f1 = confusion_macro_f1(r.confusion);
  r.train_traces = train.size();
  r.test_traces = test.size();
  r.mean_vote_fraction = votes / static_cast<double>(test.size());

  std::uint64_t observed = 0, payload = 0;
  for (const auto* set : {&train, &test}) {
    for (const auto& t : *set) {
      for (const auto& s : t.trace.samples) observed += s.size;
      payload += t.payload_bytes;
    }
  }
  r.overhead = payload == 0 ? 1.0 : static_cast<double>(observed) / static_cast<double>(payload);
  return r;
}

nlohmann::json to_json(const ExperimentReport& r, bool include_confusion) {
  nlohmann::json j;
  j["scenario"] = std::string(scenario_name(r.scenario));
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["train_traces"] = r.train_traces;
  j["test_traces"] = r.test_traces;
  j["overhead"] = r.overhead;
  j["mean_vote_fraction"] = r.mean_vote_fraction;
  if (include_confusion) j["confusion"] = r.confusion;
  return j;
}

}  // namespace specleak
