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

#include <bit>
#include <cmath>
#include <cstring>
#include <random>
#include <vector>

#include "doctest.h"
#include "specleak/kernels.hpp"

using namespace specleak;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint32_t seed, double lo = -100.0, double hi = 100.0) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(gen);
  return v;
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

}  // namespace

TEST_SUITE("kernels") {
  TEST_CASE("scalar kernels agree with naive loops") {
    const auto& k = kernels::scalar_table();
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 256u}) {
      auto x = random_vec(n, 1 + n);
      auto y = random_vec(n, 100 + n);
      double s = 0, d = 0, a = 0;
      for (std::size_t i = 0; i < n; ++i) {
        s += x[i];
        d += x[i] * y[i];
        a += std::fabs(x[i] - y[i]);
      }
      CHECK(k.sum(x.data(), n) == doctest::Approx(s).epsilon(1e-12));
      CHECK(k.dot(x.data(), y.data(), n) == doctest::Approx(d).epsilon(1e-12));
      CHECK(k.abs_diff_sum(x.data(), y.data(), n) == doctest::Approx(a).epsilon(1e-12));
    }
  }

  TEST_CASE("argmax returns the first maximum") {
    std::vector<double> v{0.1, 0.7, 0.2};
    CHECK(kernels::argmax(v) == 1);
    std::vector<double> tie{0.5, 0.5};
    CHECK(kernels::argmax(tie) == 0);
    std::vector<double> late(13, 1.0);
    late[9] = 3.0;
    late[12] = 3.0;
    CHECK(kernels::scalar_table().argmax(late.data(), late.size()) == 9);
    CHECK(kernels::argmax(std::span<const double>{}) == 0);
  }

  TEST_CASE("widen_u32 pads and truncates") {
    std::vector<std::uint32_t> in{3, 4, 4000000000u};
    std::vector<double> out(5, -1.0);
    kernels::widen_u32(in, out);
    CHECK(out == std::vector<double>{3, 4, 4000000000.0, 0, 0});
    std::vector<double> shorter(2);
    kernels::widen_u32(in, shorter);
    CHECK(shorter == std::vector<double>{3, 4});
  }

  TEST_CASE("pearson of a linear relation is 1") {
    std::vector<double> x{1, 2, 3, 4, 5, 6, 7};
    std::vector<double> y;
    for (double v : x) y.push_back(3 * v + 1);
    CHECK(kernels::pearson(kernels::moments(x, y), x.size()) == doctest::Approx(1.0));
    std::vector<double> c(7, 2.0);
    CHECK(kernels::pearson(kernels::moments(x, c), x.size()) == 0.0);
  }

  TEST_CASE("AVX2 variants are bit-identical to scalar") {
    const kernels::KernelTable* v = kernels::avx2_table();
    if (v == nullptr) {
      MESSAGE("AVX2 not available; skipping equivalence");
      return;
    }
    const auto& s = kernels::scalar_table();
    for (std::size_t n = 0; n < 70; ++n) {
      auto x = random_vec(n, 7 * n + 1, -1e3, 1e3);
      auto y = random_vec(n, 7 * n + 2, -1e3, 1e3);
      CHECK(same_bits(s.sum(x.data(), n), v->sum(x.data(), n)));
      CHECK(same_bits(s.dot(x.data(), y.data(), n), v->dot(x.data(), y.data(), n)));
      CHECK(same_bits(s.abs_diff_sum(x.data(), y.data(), n), v->abs_diff_sum(x.data(), y.data(), n)));
      CHECK(s.argmax(x.data(), n) == v->argmax(x.data(), n));
      auto ms = s.moments(x.data(), y.data(), n);
      auto mv = v->moments(x.data(), y.data(), n);
      CHECK(same_bits(ms.sx, mv.sx));
      CHECK(same_bits(ms.sy, mv.sy));
      CHECK(same_bits(ms.sxx, mv.sxx));
      CHECK(same_bits(ms.syy, mv.syy));
      CHECK(same_bits(ms.sxy, mv.sxy));
      auto xs = x, xv = x;
      s.scale(xs.data(), n, 0.37);
      v->scale(xv.data(), n, 0.37);
      CHECK(std::memcmp(xs.data(), xv.data(), n * sizeof(double)) == 0);

      std::vector<std::uint32_t> u(n);
      std::mt19937 gen(static_cast<std::uint32_t>(n));
      for (auto& e : u) e = gen();
      for (std::size_t len : {std::size_t{0}, n / 2, n, n + 9}) {
        std::vector<double> a(len, -1), b(len, -1);
        s.widen_u32(u.data(), n, a.data(), len);
        v->widen_u32(u.data(), n, b.data(), len);
        CHECK(a == b);
      }
    }
    // Ties spread across lanes must still resolve to the first index.
    std::vector<double> ties(37, 0.0);
    for (std::size_t i : {5u, 6u, 11u, 30u}) ties[i] = 9.0;
    CHECK(v->argmax(ties.data(), ties.size()) == 5);
  }

  TEST_CASE("active table honours SPECLEAK_SIMD") {
    const char* env = std::getenv("SPECLEAK_SIMD");
    if (env != nullptr && std::string_view(env) == "scalar") CHECK(kernels::active().isa == kernels::Isa::kScalar);
    CHECK(!kernels::isa_name(kernels::active().isa).empty());
  }
}
