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

#include <cstdlib>
#include <fstream>

#include "specleak/error.hpp"
#include "specleak/harness.hpp"

#ifndef SPECLEAK_DATA_DIR_DEFAULT
#define SPECLEAK_DATA_DIR_DEFAULT "data"
#endif

namespace specleak::harness {

json default_config() {
  return json::parse(R"({
    "data_dir": null,
    "workers": 1,
    "model": {"corpus": "toy_corpus.txt", "order": 3, "alpha": 1e-6, "file": null},
    "engine": {
      "type": "lookahead",
      "n": 5, "g": 5,
      "store": "toy_store.txt", "max_match_len": 6, "top_k": 4, "draft_len": 3,
      "draft_order": 2, "draft_alpha": 1e-6, "pair_draft_len": 4, "fallback": 0.5, "rollback": 2.0
    },
    "sampler": {"temperature": 0.0, "seed": 1},
    "mitigation": "none",
    "session": {"max_tokens": 320, "separator": " "},
    "fingerprint": {
      "scenario": "exact",
      "prompts": "prompts_exp1.txt",
      "similar_prompts": "prompts_exp2.txt",
      "rephrased_prompts": "prompts_rephrased.txt",
      "tpq": 5, "test_traces": 5, "feature_len": 64,
      "shuffle_labels": false,
      "seeds": [1],
      "include_confusion": true,
      "sweep": {"enabled": false, "tpq": [5, 10, 20, 30], "temperature": [0.3, 0.6, 0.8, 1.0]}
    },
    "forest": {
      "n_trees": 150, "max_depth": 15, "min_samples_split": 10, "min_samples_leaf": 1,
      "criterion": "gini", "bootstrap": true, "max_features": 0, "seed": 0
    },
    "mitigation_sweep": {
      "temperature": 0.3,
      "constant": [1024],
      "variable": [0, 6, 12, 24, 48],
      "aggregate": [1, 3, 5, 10, 20],
      "seeds": [1, 2, 3, 4, 5]
    },
    "extraction": {
      "strategies": ["random", "common_words", "feedback_reuse"],
      "budget": 2000, "tokens_per_query": 8, "max_tokens": 32, "temperature": 0.0,
      "seeds": [1, 2, 3],
      "store": "toy_store.txt",
      "wordlist": "wordlist.txt", "top_words": 10000,
      "include_leaks": true
    },
    "probe": {
      "n_values": [3, 4, 5, 6, 7, 8],
      "g_values": [1, 2, 3, 4, 5, 6],
      "seeds": [1, 2, 3, 4, 5],
      "n_upper": 16, "g_upper": 6, "g_probe_n": 4,
      "token": "A",
      "phrases": "gprobe_phrases.txt",
      "temperature": 0.0
    }
  })");
}

namespace {

std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

bool compatible(const json& base, const json& v) {
  if (base.is_null()) return v.is_null() || v.is_string();
  if (base.is_boolean()) return v.is_boolean();
  if (base.is_string()) return v.is_string();
  if (base.is_number_unsigned()) return v.is_number_unsigned();
  if (base.is_number()) return v.is_number();
  if (base.is_array()) return v.is_array();
  return base.type() == v.type();
}

std::string type_name(const json& base) {
  if (base.is_null()) return "a string or null";
  if (base.is_number_unsigned()) return "a non-negative integer";
  if (base.is_number()) return "a number";
  if (base.is_boolean()) return "a boolean";
  if (base.is_string()) return "a string";
  if (base.is_array()) return "an array";
  return "an object";
}

void merge_into(json& base, const json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) throw ConfigError("config " + (prefix.empty() ? "root" : "'" + prefix + "'") + " must be an object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string path = join_path(prefix, key);
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      merge_into(slot, value, path);
      continue;
    }
    if (!compatible(slot, value)) throw ConfigError("config key '" + path + "' must be " + type_name(slot));
    if (slot.is_array() && !slot.empty()) {
      for (const auto& item : value) {
        if (!compatible(slot.front(), item)) {
          throw ConfigError("config key '" + path + "' must hold " + type_name(slot.front()) + " values");
        }
      }
    }
    // Keep floating point keys floating point so reports print them the same way.
    if (slot.is_number_float() && value.is_number_integer()) {
      slot = value.get<double>();
    } else if (slot.is_array() && !slot.empty() && slot.front().is_number_float()) {
      json arr = json::array();
      for (const auto& item : value) arr.push_back(item.get<double>());
      slot = std::move(arr);
    } else {
      slot = value;
    }
  }
}

}  // namespace

json merge_config(const json& base, const json& overlay) {
  json out = base;
  merge_into(out, overlay, "");
  return out;
}

void apply_override(json& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key.path=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json overlay = value;
  std::string rest = path;
  std::vector<std::string> keys;
  for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1)) {
    keys.push_back(rest.substr(0, pos));
  }
  keys.push_back(rest);
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) overlay = json{{*it, std::move(overlay)}};
  config = merge_config(config, overlay);
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return merge_config(default_config(), parsed);
}

void validate_config(const json& c) {
  auto positive = [&](const json& section, const char* key, const std::string& prefix) {
    if (section.at(key).get<std::uint64_t>() < 1) throw ConfigError("config key '" + prefix + "." + key + "' must be >= 1");
  };
  auto nonempty = [&](const json& arr, const std::string& path) {
    if (arr.empty()) throw ConfigError("config key '" + path + "' must not be empty");
  };
  auto temperature = [&](double t, const std::string& path) {
    if (!(t >= 0.0)) throw ConfigError("config key '" + path + "' must be >= 0");
  };

  const json& m = c.at("model");
  const auto order = m.at("order").get<std::uint64_t>();
  if (order < 1 || order > static_cast<std::uint64_t>(NGramModel::kMaxOrder)) {
    throw ConfigError("config key 'model.order' must be in 1.." + std::to_string(NGramModel::kMaxOrder));
  }
  if (!(m.at("alpha").get<double>() > 0.0)) throw ConfigError("config key 'model.alpha' must be > 0");
  positive(c, "workers", "");

  const json& e = c.at("engine");
  parse_engine_kind(e.at("type").get<std::string>());
  if (e.at("n").get<std::uint64_t>() < 2) throw ConfigError("config key 'engine.n' must be >= 2");
  positive(e, "g", "engine");
  positive(e, "max_match_len", "engine");
  positive(e, "top_k", "engine");
  positive(e, "draft_len", "engine");
  positive(e, "pair_draft_len", "engine");
  const auto draft_order = e.at("draft_order").get<std::uint64_t>();
  if (draft_order < 1 || draft_order > static_cast<std::uint64_t>(NGramModel::kMaxOrder)) {
    throw ConfigError("config key 'engine.draft_order' out of range");
  }
  if (!(e.at("draft_alpha").get<double>() > 0.0)) throw ConfigError("config key 'engine.draft_alpha' must be > 0");
  const double fb = e.at("fallback").get<double>();
  if (!(fb > 0.0 && fb <= 1.0)) throw ConfigError("config key 'engine.fallback' must be in (0, 1]");
  if (!(e.at("rollback").get<double>() > 0.0)) throw ConfigError("config key 'engine.rollback' must be > 0");

  temperature(c.at("sampler").at("temperature").get<double>(), "sampler.temperature");
  MitigationPolicy::parse(c.at("mitigation").get<std::string>());
  positive(c.at("session"), "max_tokens", "session");

  const json& f = c.at("fingerprint");
  parse_scenario(f.at("scenario").get<std::string>());
  positive(f, "tpq", "fingerprint");
  positive(f, "test_traces", "fingerprint");
  positive(f, "feature_len", "fingerprint");
  nonempty(f.at("seeds"), "fingerprint.seeds");
  nonempty(f.at("sweep").at("tpq"), "fingerprint.sweep.tpq");
  nonempty(f.at("sweep").at("temperature"), "fingerprint.sweep.temperature");
  for (const auto& v : f.at("sweep").at("tpq")) {
    if (v.get<std::uint64_t>() < 1) throw ConfigError("config key 'fingerprint.sweep.tpq' values must be >= 1");
  }
  for (const auto& t : f.at("sweep").at("temperature")) temperature(t.get<double>(), "fingerprint.sweep.temperature");
  forest_config(c).validate();

  const json& ms = c.at("mitigation_sweep");
  temperature(ms.at("temperature").get<double>(), "mitigation_sweep.temperature");
  nonempty(ms.at("seeds"), "mitigation_sweep.seeds");
  for (const auto& v : ms.at("constant")) {
    if (v.get<std::uint64_t>() < 1) throw ConfigError("config key 'mitigation_sweep.constant' values must be >= 1");
  }
  for (const auto& v : ms.at("aggregate")) {
    if (v.get<std::uint64_t>() < 1) throw ConfigError("config key 'mitigation_sweep.aggregate' values must be >= 1");
  }

  const json& x = c.at("extraction");
  nonempty(x.at("strategies"), "extraction.strategies");
  for (const auto& s : x.at("strategies")) parse_strategy(s.get<std::string>());
  positive(x, "budget", "extraction");
  positive(x, "tokens_per_query", "extraction");
  positive(x, "max_tokens", "extraction");
  positive(x, "top_words", "extraction");
  temperature(x.at("temperature").get<double>(), "extraction.temperature");
  nonempty(x.at("seeds"), "extraction.seeds");

  const json& p = c.at("probe");
  nonempty(p.at("n_values"), "probe.n_values");
  nonempty(p.at("g_values"), "probe.g_values");
  nonempty(p.at("seeds"), "probe.seeds");
  for (const auto& v : p.at("n_values")) {
    if (v.get<std::uint64_t>() < 2) throw ConfigError("config key 'probe.n_values' values must be >= 2");
  }
  for (const auto& v : p.at("g_values")) {
    if (v.get<std::uint64_t>() < 1) throw ConfigError("config key 'probe.g_values' values must be >= 1");
  }
  if (p.at("n_upper").get<std::uint64_t>() < 2) throw ConfigError("config key 'probe.n_upper' must be >= 2");
  positive(p, "g_upper", "probe");
  if (p.at("g_probe_n").get<std::uint64_t>() < 2) throw ConfigError("config key 'probe.g_probe_n' must be >= 2");
  temperature(p.at("temperature").get<double>(), "probe.temperature");
}

std::string data_dir(const json& config) {
  if (config.contains("data_dir") && config["data_dir"].is_string()) return config["data_dir"].get<std::string>();
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0') return env;
  return SPECLEAK_DATA_DIR_DEFAULT;
}

std::string data_path(const json& config, const std::string& name) {
  if (!name.empty() && name.front() == '/') return name;
  return data_dir(config) + "/" + name;
}

ForestConfig forest_config(const json& config) {
  const json& f = config.at("forest");
  ForestConfig fc;
  fc.n_trees = f.at("n_trees").get<std::size_t>();
  fc.max_depth = f.at("max_depth").get<std::size_t>();
  fc.min_samples_split = f.at("min_samples_split").get<std::size_t>();
  fc.min_samples_leaf = f.at("min_samples_leaf").get<std::size_t>();
  fc.criterion = parse_criterion(f.at("criterion").get<std::string>());
  fc.bootstrap = f.at("bootstrap").get<bool>();
  fc.max_features = f.at("max_features").get<std::size_t>();
  fc.seed = f.at("seed").get<std::uint64_t>();
  fc.threads = config.at("workers").get<unsigned>();
  return fc;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace specleak::harness
