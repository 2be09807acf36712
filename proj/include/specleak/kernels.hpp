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

// Data-parallel inner loops shared by the language model, the observer and the
// forest. Every kernel has a scalar reference and (on x86-64) an AVX2 variant;
// the active table is picked once at startup from CPUID and can be pinned to
// the scalar path with SPECLEAK_SIMD=scalar.
//
// Reductions use a fixed 4-lane accumulation order in both variants so that
// scalar and vector results are bit-identical, not merely close. Translation
// units are built with -ffp-contract=off to keep that guarantee.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace specleak::kernels {

enum class Isa { kScalar, kAvx2 };

std::string_view isa_name(Isa isa);

struct Moments {
  double sx = 0.0;
  double sy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
};

struct KernelTable {
  Isa isa;
  double (*sum)(const double* x, std::size_t n);
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*scale)(double* x, std::size_t n, double factor);
  // Index of the first maximum; 0 for n == 0.
  std::size_t (*argmax)(const double* x, std::size_t n);
  Moments (*moments)(const double* x, const double* y, std::size_t n);
  double (*abs_diff_sum)(const double* x, const double* y, std::size_t n);
  // Converts n values into out[0..out_len), zero-filling past n and dropping
  // values past out_len.
  void (*widen_u32)(const std::uint32_t* in, std::size_t n, double* out, std::size_t out_len);
};

const KernelTable& scalar_table();

// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_table();

const KernelTable& active();

// Span conveniences over active().
double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
void scale(std::span<double> x, double factor);
std::size_t argmax(std::span<const double> x);
Moments moments(std::span<const double> x, std::span<const double> y);
double abs_diff_sum(std::span<const double> x, std::span<const double> y);
void widen_u32(std::span<const std::uint32_t> in, std::span<double> out);

// Pearson correlation from a Moments accumulator; 0 when either side is
// constant.
double pearson(const Moments& m, std::size_t n);

}  // namespace specleak::kernels
