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

// CART random forest for trace classification.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace specleak {

enum class SplitCriterion { kGini, kMseOneHot };

std::string_view criterion_name(SplitCriterion c);
SplitCriterion parse_criterion(std::string_view name);

struct ForestConfig {
  std::size_t n_trees = 150;
  std::size_t max_depth = 15;
  std::size_t min_samples_split = 10;
  std::size_t min_samples_leaf = 1;
  SplitCriterion criterion = SplitCriterion::kGini;
  bool bootstrap = true;
  std::size_t max_features = 0;  // 0 = floor(sqrt(features))
  std::uint64_t seed = 0;
  unsigned threads = 1;
  void validate() const;
};

struct LabeledDataset {
  std::vector<std::vector<double>> features;
  std::vector<std::uint32_t> labels;  // dense in [0, num_labels)
  std::size_t num_labels = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t width() const noexcept { return features.empty() ? 0 : features.front().size(); }
  void add(std::vector<double> fv, std::uint32_t label);
  void validate() const;
};

struct Prediction {
  std::uint32_t label = 0;
  double vote_fraction = 0.0;
};

class DecisionTree {
 public:
  struct Node {
    std::int32_t feature = -1;  // -1 = leaf
    double threshold = 0.0;     // go left when x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint32_t label = 0;
    std::uint32_t samples = 0;
  };

  std::uint32_t predict(std::span<const double> x) const;
  std::size_t depth() const;
  const std::vector<Node>& nodes() const noexcept { return nodes_; }

  // Grows a tree on the given sample rows (duplicates allowed).
  static DecisionTree grow(const LabeledDataset& ds, std::vector<std::uint32_t> rows, const ForestConfig& cfg,
                           std::uint64_t seed);

 private:
  std::vector<Node> nodes_;
};

class ForestModel {
 public:
  // Majority vote over trees; ties go to the lowest label.
  Prediction predict(std::span<const double> x) const;

  std::size_t width() const noexcept { return width_; }
  std::size_t num_labels() const noexcept { return num_labels_; }
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  friend ForestModel train_forest(const LabeledDataset& ds, const ForestConfig& cfg);

 private:
  std::vector<DecisionTree> trees_;
  std::size_t width_ = 0;
  std::size_t num_labels_ = 0;
};

// Throws ConfigError for fewer than 2 distinct labels or ragged vectors.
ForestModel train_forest(const LabeledDataset& ds, const ForestConfig& cfg);

}  // namespace specleak
