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

// Experiment plumbing shared by the CLI and the acceptance runner: one JSON
// config, defaults for every key, and report builders that echo the config
// they ran with.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "specleak/extraction.hpp"
#include "specleak/fingerprint.hpp"
#include "specleak/probes.hpp"

namespace specleak::harness {

using nlohmann::json;

inline constexpr const char* kDataDirEnv = "SPECLEAK_DATA_DIR";

json default_config();

// Deep merge of `overlay` into `base`. Unknown keys and type mismatches
// against `base` throw ConfigError naming the key path.
json merge_config(const json& base, const json& overlay);

// "a.b.c=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(json& config, std::string_view assignment);

// Defaults merged with the file's contents.
json load_config_file(const std::string& path);

// Range checks on top of the structural ones. Throws ConfigError.
void validate_config(const json& config);

// data_dir key, else $SPECLEAK_DATA_DIR, else the source tree's data/.
std::string data_dir(const json& config);
// Absolute names pass through; others resolve against data_dir.
std::string data_path(const json& config, const std::string& name);

// Everything a run needs, loaded once from the config.
struct Bench {
  json config;
  std::shared_ptr<const NGramModel> model;
  EngineSpec engine;
  SamplerConfig sampler;
  MitigationPolicy policy;
  std::size_t max_tokens = 0;
  std::string separator;
  unsigned workers = 1;
};

Bench load_bench(const json& config);

ForestConfig forest_config(const json& config);

// Base experiment for the fingerprint section (scenario, prompts, forest).
ExperimentSpec experiment_spec(const Bench& bench);

// Report builders. Every report is {"kind", "config", "results"}.
json fingerprint_report(const json& config);  // sweep grid when fingerprint.sweep.enabled
json mitigation_report(const json& config);
json extraction_report(const json& config);
json probe_n_report(const json& config);
json probe_g_report(const json& config);

// Rebuilds a report of the given kind from a config.
json run_report(std::string_view kind, const json& config);

// Flat CSV views of reports; empty when a kind has none.
std::string report_csv(const json& report);

// Canonical text form: two-space indent, trailing newline.
std::string dump(const json& j);

}  // namespace specleak::harness
