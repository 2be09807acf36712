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

#include <functional>
#include <map>
#include <set>

#include "doctest.h"
#include "specleak/error.hpp"
#include "specleak/fingerprint.hpp"
#include "specleak/forest.hpp"

using namespace specleak;

namespace {

LabeledDataset blobs(std::size_t per_label, std::size_t labels, std::size_t width, std::uint64_t seed) {
  LabeledDataset ds;
  CounterRng rng(seed);
  for (std::uint32_t l = 0; l < labels; ++l) {
    for (std::size_t i = 0; i < per_label; ++i) {
      std::vector<double> v(width);
      for (std::size_t j = 0; j < width; ++j) v[j] = 10.0 * l + (j % 3) + rng.uniform();
      ds.add(v, l);
    }
  }
  return ds;
}

// Exhaustive one-feature CART: recompute Gini from scratch for every
// threshold, take the first best, recurse.
struct OracleTree {
  std::function<std::uint32_t(double)> predict;
};

std::uint32_t majority_label(const std::vector<std::pair<double, std::uint32_t>>& pts, std::size_t k) {
  std::vector<int> c(k);
  for (auto& p : pts) ++c[p.second];
  return static_cast<std::uint32_t>(std::max_element(c.begin(), c.end()) - c.begin());
}

double gini(const std::vector<std::pair<double, std::uint32_t>>& pts, std::size_t k) {
  std::vector<double> c(k);
  for (auto& p : pts) ++c[p.second];
  double s = 0;
  for (double v : c) s += (v / pts.size()) * (v / pts.size());
  return 1.0 - s;
}

std::function<std::uint32_t(double)> oracle(std::vector<std::pair<double, std::uint32_t>> pts, std::size_t k,
                                             std::size_t depth, const ForestConfig& cfg) {
  const std::uint32_t maj = majority_label(pts, k);
  std::set<std::uint32_t> ls;
  for (auto& p : pts) ls.insert(p.second);
  if (ls.size() == 1 || depth >= cfg.max_depth || pts.size() < cfg.min_samples_split) {
    return [maj](double) { return maj; };
  }
  std::sort(pts.begin(), pts.end());
  double best = 1e300;
  double thr = 0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i].first == pts[i + 1].first) continue;
    std::vector<std::pair<double, std::uint32_t>> l(pts.begin(), pts.begin() + i + 1), r(pts.begin() + i + 1, pts.end());
    const double imp = l.size() * gini(l, k) + r.size() * gini(r, k);
    if (imp < best - 1e-12) {
      best = imp;
      thr = (pts[i].first + pts[i + 1].first) / 2;
    }
  }
  if (best == 1e300) return [maj](double) { return maj; };
  std::vector<std::pair<double, std::uint32_t>> l, r;
  for (auto& p : pts) (p.first <= thr ? l : r).push_back(p);
  auto fl = oracle(l, k, depth + 1, cfg), fr = oracle(r, k, depth + 1, cfg);
  return [=](double x) { return x <= thr ? fl(x) : fr(x); };
}

}  // namespace

TEST_SUITE("forest") {
  TEST_CASE("separable constant vectors are learned exactly") {
    LabeledDataset ds;
    for (int i = 0; i < 5; ++i) {
      ds.add({1, 2, 3}, 0);
      ds.add({4, 5, 6}, 1);
    }
    auto m = train_forest(ds, {});
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(m.predict(ds.features[i]).label == ds.labels[i]);
  }

  TEST_CASE("indistinguishable vectors cannot beat the class prior") {
    LabeledDataset ds;
    for (int i = 0; i < 6; ++i) ds.add({7, 7}, 0);
    for (int i = 0; i < 4; ++i) ds.add({7, 7}, 1);
    auto m = train_forest(ds, {});
    std::size_t right = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) right += m.predict(ds.features[i]).label == ds.labels[i];
    CHECK(right / double(ds.size()) <= 0.6);
  }

  TEST_CASE("training vectors replay to their own label") {
    auto ds = blobs(6, 8, 10, 3);
    ForestConfig cfg;
    cfg.n_trees = 40;
    auto m = train_forest(ds, cfg);
    for (std::size_t i = 0; i < ds.size(); ++i) CHECK(m.predict(ds.features[i]).label == ds.labels[i]);
    auto p = m.predict(std::vector<double>(10, 0.0));
    CHECK(p.vote_fraction <= 1.0);
    CHECK(p.label < 8);
  }

  TEST_CASE("a single tree agrees with the exhaustive oracle") {
    std::vector<double> xs{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<std::uint32_t> ys{0, 0, 0, 1, 1, 1, 1, 0, 0, 2};
    LabeledDataset ds;
    std::vector<std::pair<double, std::uint32_t>> pts;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      ds.add({xs[i]}, ys[i]);
      pts.emplace_back(xs[i], ys[i]);
    }
    for (std::size_t split : {2u, 3u, 10u}) {
      ForestConfig cfg;
      cfg.n_trees = 1;
      cfg.bootstrap = false;
      cfg.min_samples_split = split;
      auto m = train_forest(ds, cfg);
      auto f = oracle(pts, 3, 0, cfg);
      for (double x = 0; x <= 11; x += 0.25) CHECK(m.predict(std::vector<double>{x}).label == f(x));
    }
  }

  TEST_CASE("trees respect depth and leaf bounds") {
    auto ds = blobs(20, 6, 12, 9);
    ForestConfig cfg;
    cfg.n_trees = 10;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 4;
    auto m = train_forest(ds, cfg);
    for (const auto& t : m.trees()) {
      CHECK(t.depth() <= 3);
      for (const auto& n : t.nodes()) {
        if (n.feature < 0) CHECK(n.samples >= 4);
        if (n.feature >= 0) CHECK(n.samples >= cfg.min_samples_split);
      }
    }
  }

  TEST_CASE("gini and one-hot MSE grow the same forest") {
    auto ds = blobs(8, 5, 9, 1);
    ForestConfig g;
    g.n_trees = 20;
    ForestConfig mse = g;
    mse.criterion = SplitCriterion::kMseOneHot;
    auto a = train_forest(ds, g);
    auto b = train_forest(ds, mse);
    CounterRng rng(2);
    for (int i = 0; i < 200; ++i) {
      std::vector<double> x(9);
      for (auto& v : x) v = rng.uniform() * 50;
      CHECK(a.predict(x).label == b.predict(x).label);
    }
  }

  TEST_CASE("training is seeded and thread-count independent") {
    auto ds = blobs(8, 6, 16, 5);
    ForestConfig cfg;
    cfg.n_trees = 30;
    cfg.seed = 77;
    auto a = train_forest(ds, cfg);
    cfg.threads = 3;
    auto b = train_forest(ds, cfg);
    CounterRng rng(8);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x(16);
      for (auto& v : x) v = rng.uniform() * 60;
      auto pa = a.predict(x), pb = b.predict(x);
      CHECK(pa.label == pb.label);
      CHECK(pa.vote_fraction == pb.vote_fraction);
    }
  }

  TEST_CASE("errors") {
    LabeledDataset one;
    one.add({1}, 0);
    one.add({2}, 0);
    CHECK_THROWS_AS(train_forest(one, {}), ConfigError);
    auto ds = blobs(3, 2, 4, 1);
    auto m = train_forest(ds, {});
    CHECK_THROWS_AS(m.predict(std::vector<double>{1, 2}), ConfigError);
    CHECK(parse_criterion("mse") == SplitCriterion::kMseOneHot);
    CHECK_THROWS_AS(parse_criterion("entropy"), ConfigError);
  }

  TEST_CASE("accuracy and macro F1 match a direct computation") {
    std::vector<std::uint32_t> truth{0, 0, 1, 1, 2, 2, 2};
    std::vector<std::uint32_t> pred{0, 1, 1, 1, 2, 0, 2};
    std::vector<std::vector<std::uint32_t>> cm(3, std::vector<std::uint32_t>(3));
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm[truth[i]][pred[i]];
    CHECK(confusion_accuracy(cm) == doctest::Approx(5.0 / 7.0));
    // per-class F1: c0 p=1/2 r=1/2 -> .5 ; c1 p=2/3 r=1 -> .8 ; c2 p=1 r=2/3 -> .8
    CHECK(confusion_macro_f1(cm) == doctest::Approx((0.5 + 0.8 + 0.8) / 3));
  }
}
