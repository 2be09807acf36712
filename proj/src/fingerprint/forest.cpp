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
#include <cmath>
#include <thread>

#include "specleak/error.hpp"
#include "specleak/forest.hpp"
#include "specleak/lm.hpp"

namespace specleak {

std::string_view criterion_name(SplitCriterion c) { return c == SplitCriterion::kGini ? "gini" : "mse"; }

SplitCriterion parse_criterion(std::string_view name) {
  if (name == "gini") return SplitCriterion::kGini;
  if (name == "mse") return SplitCriterion::kMseOneHot;
  throw ConfigError("unknown split criterion '" + std::string(name) + "' (expected gini or mse)");
}

void ForestConfig::validate() const {
  if (n_trees < 1) throw ConfigError("forest needs at least one tree");
  if (max_depth < 1) throw ConfigError("max_depth must be >= 1");
  if (min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
  if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
}

void LabeledDataset::add(std::vector<double> fv, std::uint32_t label) {
  features.push_back(std::move(fv));
  labels.push_back(label);
  num_labels = std::max<std::size_t>(num_labels, label + 1);
}

void LabeledDataset::validate() const {
  if (features.size() != labels.size()) throw ConfigError("dataset feature/label count mismatch");
  if (labels.empty()) throw ConfigError("empty dataset");
  for (const auto& f : features) {
    if (f.size() != width()) throw ConfigError("dataset vectors have different lengths");
  }
  for (auto l : labels) {
    if (l >= num_labels) throw ConfigError("label outside [0, num_labels)");
  }
}

namespace {

struct SplitChoice {
  std::int32_t feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // higher is better
};

std::uint32_t majority(std::span<const std::uint32_t> counts) {
  std::uint32_t best = 0;
  for (std::uint32_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best]) best = k;
  }
  return best;
}

// Both criteria reduce to maximizing sum_side(S_side / n_side) with S the sum
// of squared class counts, but they are written from their own definitions:
// Gini from 1 - sum p^2, MSE from the per-class variance of one-hot targets.
double child_impurity(SplitCriterion c, double n, double sq_counts) {
  if (c == SplitCriterion::kGini) return n * (1.0 - sq_counts / (n * n));
  // sum_k sum_i (y_ik - mean_k)^2 with y one-hot: sum_k (c_k - c_k^2 / n)
  return n - sq_counts / n;
}

class TreeBuilder {
 public:
  TreeBuilder(const LabeledDataset& ds, const ForestConfig& cfg, std::uint64_t seed)
      : ds_(ds), cfg_(cfg), rng_(seed), width_(ds.width()) {
    mtry_ = cfg.max_features != 0 ? std::min(cfg.max_features, width_)
                                  : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(double(width_))));
    order_.resize(width_);
    left_.resize(ds.num_labels);
    right_.resize(ds.num_labels);
  }

  std::vector<DecisionTree::Node> build(std::vector<std::uint32_t> rows) {
    rows_ = std::move(rows);
    nodes_.clear();
    grow(0, rows_.size(), 0);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::size_t lo, std::size_t hi, std::size_t depth) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    std::vector<std::uint32_t> counts(ds_.num_labels);
    for (std::size_t i = lo; i < hi; ++i) ++counts[ds_.labels[rows_[i]]];
    const std::size_t n = hi - lo;
    nodes_[id].label = majority(counts);
    nodes_[id].samples = static_cast<std::uint32_t>(n);
    const bool pure = counts[nodes_[id].label] == n;
    if (pure || depth >= cfg_.max_depth || n < cfg_.min_samples_split || n < 2 * cfg_.min_samples_leaf) return id;

    const SplitChoice split = best_split(lo, hi, counts);
    if (split.feature < 0) return id;

    const auto f = static_cast<std::size_t>(split.feature);
    auto mid = std::partition(rows_.begin() + static_cast<std::ptrdiff_t>(lo), rows_.begin() + static_cast<std::ptrdiff_t>(hi),
                              [&](std::uint32_t r) { return ds_.features[r][f] <= split.threshold; });
    const auto m = static_cast<std::size_t>(mid - rows_.begin());
    nodes_[id].feature = split.feature;
    nodes_[id].threshold = split.threshold;
    const std::int32_t l = grow(lo, m, depth + 1);
    const std::int32_t r = grow(m, hi, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  SplitChoice best_split(std::size_t lo, std::size_t hi, const std::vector<std::uint32_t>& counts) {
    const std::size_t n = hi - lo;
    // Random feature order; constant features do not count toward mtry.
    for (std::size_t i = 0; i < width_; ++i) order_[i] = static_cast<std::uint32_t>(i);
    SplitChoice best;
    double best_impurity = INFINITY;
    std::size_t visited = 0;
    std::vector<std::pair<double, std::uint32_t>> col(n);
    for (std::size_t i = 0; i < width_ && visited < mtry_; ++i) {
      const std::size_t j = i + rng_.below(width_ - i);
      std::swap(order_[i], order_[j]);
      const std::uint32_t f = order_[i];

      for (std::size_t k = 0; k < n; ++k) {
        const std::uint32_t r = rows_[lo + k];
        col[k] = {ds_.features[r][f], ds_.labels[r]};
      }
      std::sort(col.begin(), col.end());
      if (col.front().first == col.back().first) continue;
      ++visited;

      std::fill(left_.begin(), left_.end(), 0);
      double sq_left = 0.0;
      double sq_right = 0.0;
      for (std::size_t k = 0; k < counts.size(); ++k) {
        right_[k] = counts[k];
        sq_right += double(counts[k]) * double(counts[k]);
      }
      for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::uint32_t c = col[k].second;
        sq_left += 2.0 * left_[c] + 1.0;
        sq_right -= 2.0 * right_[c] - 1.0;
        ++left_[c];
        --right_[c];
        const std::size_t nl = k + 1, nr = n - nl;
        if (col[k].first == col[k + 1].first) continue;
        if (nl < cfg_.min_samples_leaf || nr < cfg_.min_samples_leaf) continue;
        const double imp = child_impurity(cfg_.criterion, double(nl), sq_left) +
                           child_impurity(cfg_.criterion, double(nr), sq_right);
        if (imp < best_impurity) {
          best_impurity = imp;
          best.feature = static_cast<std::int32_t>(f);
          double t = col[k].first + (col[k + 1].first - col[k].first) / 2.0;
          if (!(t < col[k + 1].first)) t = col[k].first;
          best.threshold = t;
          best.score = -imp;
        }
      }
    }
    return best;
  }

  const LabeledDataset& ds_;
  const ForestConfig& cfg_;
  CounterRng rng_;
  std::size_t width_;
  std::size_t mtry_ = 1;
  std::vector<std::uint32_t> rows_;
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> left_, right_;
  std::vector<DecisionTree::Node> nodes_;
};

}  // namespace

std::uint32_t DecisionTree::predict(std::span<const double> x) const {
  std::int32_t i = 0;
  while (nodes_[i].feature >= 0) {
    i = x[static_cast<std::size_t>(nodes_[i].feature)] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
  }
  return nodes_[i].label;
}

std::size_t DecisionTree::depth() const {
  std::vector<std::pair<std::int32_t, std::size_t>> stack{{0, 0}};
  std::size_t d = 0;
  while (!stack.empty()) {
    auto [i, level] = stack.back();
    stack.pop_back();
    d = std::max(d, level);
    if (nodes_[i].feature >= 0) {
      stack.push_back({nodes_[i].left, level + 1});
      stack.push_back({nodes_[i].right, level + 1});
    }
  }
  return d;
}

DecisionTree DecisionTree::grow(const LabeledDataset& ds, std::vector<std::uint32_t> rows, const ForestConfig& cfg,
                                std::uint64_t seed) {
  DecisionTree t;
  t.nodes_ = TreeBuilder(ds, cfg, seed).build(std::move(rows));
  return t;
}

Prediction ForestModel::predict(std::span<const double> x) const {
  if (x.size() != width_) {
    throw ConfigError("feature vector has length " + std::to_string(x.size()) + ", model expects " +
                      std::to_string(width_));
  }
  std::vector<std::uint32_t> votes(num_labels_);
  for (const auto& t : trees_) ++votes[t.predict(x)];
  const std::uint32_t best = majority(votes);
  return {best, static_cast<double>(votes[best]) / static_cast<double>(trees_.size())};
}

ForestModel train_forest(const LabeledDataset& ds, const ForestConfig& cfg) {
  cfg.validate();
  ds.validate();
  std::vector<bool> seen(ds.num_labels);
  std::size_t distinct = 0;
  for (auto l : ds.labels) {
    if (!seen[l]) {
      seen[l] = true;
      ++distinct;
    }
  }
  if (distinct < 2) throw ConfigError("training needs at least two distinct labels");

  ForestModel model;
  model.width_ = ds.width();
  model.num_labels_ = ds.num_labels;
  model.trees_.resize(cfg.n_trees);

  auto build_one = [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(cfg.seed, t, 0x7EE5);
    std::vector<std::uint32_t> rows(ds.size());
    if (cfg.bootstrap) {
      CounterRng rng(derive_seed(seed, 0xB007));
      for (auto& r : rows) r = static_cast<std::uint32_t>(rng.below(ds.size()));
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
    }
    model.trees_[t] = DecisionTree::grow(ds, std::move(rows), cfg, seed);
  };

  const unsigned threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(cfg.n_trees)));
  if (threads == 1) {
    for (std::size_t t = 0; t < cfg.n_trees; ++t) build_one(t);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t t = w; t < cfg.n_trees; t += threads) build_one(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return model;
}

}  // namespace specleak
