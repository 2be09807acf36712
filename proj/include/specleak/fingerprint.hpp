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

// Query fingerprinting: profile known prompts offline, then classify fresh
// traces from the wire.

#include <string>
#include <vector>

#include "json.hpp"
#include "specleak/forest.hpp"
#include "specleak/observer.hpp"
#include "specleak/stream.hpp"

namespace specleak {

enum class Scenario { kExact, kSimilarStructure, kApproximate };

std::string_view scenario_name(Scenario s);
Scenario parse_scenario(std::string_view name);

struct ExperimentSpec {
  Scenario scenario = Scenario::kExact;
  const NGramModel* model = nullptr;
  EngineSpec engine;
  std::vector<std::string> prompts;       // label i = prompts[i]
  std::vector<std::string> test_prompts;  // approximate scenario: rephrasings, same order
  std::size_t tpq = 5;
  std::size_t test_traces = 5;
  std::size_t max_tokens = 320;
  std::size_t feature_len = 64;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  MitigationPolicy policy;
  std::string separator = " ";
  ForestConfig forest;
  bool shuffle_labels = false;  // control: permute training labels
  unsigned workers = 1;
  void validate() const;
};

struct ExperimentReport {
  Scenario scenario = Scenario::kExact;
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::vector<std::uint32_t>> confusion;  // [true][predicted]
  std::size_t train_traces = 0;
  std::size_t test_traces = 0;
  double overhead = 1.0;  // observable bytes / payload bytes
  double mean_vote_fraction = 0.0;
};

struct LabeledTrace {
  std::uint32_t label = 0;
  Trace trace;
  std::uint64_t payload_bytes = 0;
};

// Runs `per_prompt` sessions for every prompt; phase separates the seed
// streams of profiling (0) and testing (1).
std::vector<LabeledTrace> collect_traces(const ExperimentSpec& spec, std::span<const std::string> prompts,
                                         std::size_t per_prompt, std::uint64_t phase);

ExperimentReport run_experiment(const ExperimentSpec& spec);

// Accuracy and macro F1 from a confusion matrix; F1 of a class with no true
// positives is 0.
double confusion_accuracy(const std::vector<std::vector<std::uint32_t>>& confusion);
double confusion_macro_f1(const std::vector<std::vector<std::uint32_t>>& confusion);

nlohmann::json to_json(const ExperimentReport& report, bool include_confusion = true);

}  // namespace specleak
