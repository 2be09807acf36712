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

#include <cmath>
#include <cstdlib>
#include <string>

#include "kernels_internal.hpp"

namespace specleak::kernels {

namespace detail {
#ifndef SPECLEAK_HAVE_AVX2
const KernelTable* avx2_table_if_compiled() { return nullptr; }
#endif
}  // namespace detail

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable& scalar_table() { return detail::kScalarTable; }

const KernelTable* avx2_table() {
#if defined(SPECLEAK_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? detail::avx2_table_if_compiled() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  if (const char* env = std::getenv("SPECLEAK_SIMD"); env != nullptr && std::string(env) == "scalar") {
    return scalar_table();
  }
  if (const KernelTable* t = avx2_table(); t != nullptr) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

double sum(std::span<const double> x) { return active().sum(x.data(), x.size()); }

double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

void scale(std::span<double> x, double factor) { active().scale(x.data(), x.size(), factor); }

std::size_t argmax(std::span<const double> x) { return active().argmax(x.data(), x.size()); }

Moments moments(std::span<const double> x, std::span<const double> y) {
  return active().moments(x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

double abs_diff_sum(std::span<const double> x, std::span<const double> y) {
  return active().abs_diff_sum(x.data(), y.data(), x.size() < y.size() ? x.size() : y.size());
}

void widen_u32(std::span<const std::uint32_t> in, std::span<double> out) {
  active().widen_u32(in.data(), in.size(), out.data(), out.size());
}

double pearson(const Moments& m, std::size_t n) {
  if (n < 2) return 0.0;
  const double dn = static_cast<double>(n);
  const double cov = m.sxy - m.sx * m.sy / dn;
  const double vx = m.sxx - m.sx * m.sx / dn;
  const double vy = m.syy - m.sy * m.sy / dn;
  if (vx <= 0.0 || vy <= 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

}  // namespace specleak::kernels
