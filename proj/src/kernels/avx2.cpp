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

#include "kernels_internal.hpp"

#include <immintrin.h>

#include <cmath>

namespace specleak::kernels::detail {

namespace {

double reduce4(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = reduce4(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  double s = reduce4(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void scale_avx2(double* x, std::size_t n, double factor) {
  const __m256d f = _mm256_set1_pd(factor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), f));
  for (; i < n; ++i) x[i] *= factor;
}

std::size_t argmax_avx2(const double* x, std::size_t n) {
  if (n < 8) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (x[i] > x[best]) best = i;
    }
    return best;
  }
  // Per-lane running maximum; strict comparison keeps the first index seen in
  // each lane, and the cross-lane reduction prefers the lowest index on ties.
  __m256d best = _mm256_loadu_pd(x);
  __m256d best_idx = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  __m256d idx = best_idx;
  const __m256d step = _mm256_set1_pd(4.0);
  std::size_t i = 4;
  for (; i + 4 <= n; i += 4) {
    idx = _mm256_add_pd(idx, step);
    const __m256d v = _mm256_loadu_pd(x + i);
    const __m256d gt = _mm256_cmp_pd(v, best, _CMP_GT_OQ);
    best = _mm256_blendv_pd(best, v, gt);
    best_idx = _mm256_blendv_pd(best_idx, idx, gt);
  }
  alignas(32) double vals[4];
  alignas(32) double idxs[4];
  _mm256_store_pd(vals, best);
  _mm256_store_pd(idxs, best_idx);
  std::size_t arg = static_cast<std::size_t>(idxs[0]);
  double val = vals[0];
  for (int l = 1; l < 4; ++l) {
    const auto li = static_cast<std::size_t>(idxs[l]);
    if (vals[l] > val || (vals[l] == val && li < arg)) {
      val = vals[l];
      arg = li;
    }
  }
  for (; i < n; ++i) {
    if (x[i] > val) {
      val = x[i];
      arg = i;
    }
  }
  return arg;
}

Moments moments_avx2(const double* x, const double* y, std::size_t n) {
  __m256d sx = _mm256_setzero_pd(), sy = _mm256_setzero_pd(), sxx = _mm256_setzero_pd();
  __m256d syy = _mm256_setzero_pd(), sxy = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d a = _mm256_loadu_pd(x + i);
    const __m256d b = _mm256_loadu_pd(y + i);
    sx = _mm256_add_pd(sx, a);
    sy = _mm256_add_pd(sy, b);
    sxx = _mm256_add_pd(sxx, _mm256_mul_pd(a, a));
    syy = _mm256_add_pd(syy, _mm256_mul_pd(b, b));
    sxy = _mm256_add_pd(sxy, _mm256_mul_pd(a, b));
  }
  Moments m{reduce4(sx), reduce4(sy), reduce4(sxx), reduce4(syy), reduce4(sxy)};
  for (; i < n; ++i) {
    m.sx += x[i];
    m.sy += y[i];
    m.sxx += x[i] * x[i];
    m.syy += y[i] * y[i];
    m.sxy += x[i] * y[i];
  }
  return m;
}

double abs_diff_sum_avx2(const double* x, const double* y, std::size_t n) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
    acc = _mm256_add_pd(acc, _mm256_andnot_pd(sign, d));
  }
  double s = reduce4(acc);
  for (; i < n; ++i) s += std::fabs(x[i] - y[i]);
  return s;
}

void widen_u32_avx2(const std::uint32_t* in, std::size_t n, double* out, std::size_t out_len) {
  const std::size_t m = n < out_len ? n : out_len;
  const __m256d two32 = _mm256_set1_pd(4294967296.0);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const __m128i v = _mm_loadu_si128(reinterpret_cast<const __m128i*>(in + i));
    __m256d d = _mm256_cvtepi32_pd(v);
    // Values >= 2^31 come out negative from the signed conversion.
    const __m256d neg = _mm256_cmp_pd(d, zero, _CMP_LT_OQ);
    d = _mm256_add_pd(d, _mm256_and_pd(neg, two32));
    _mm256_storeu_pd(out + i, d);
  }
  for (; i < m; ++i) out[i] = static_cast<double>(in[i]);
  for (i = m; i < out_len; ++i) out[i] = 0.0;
}

const KernelTable kAvx2Table{
    Isa::kAvx2,  sum_avx2,          dot_avx2,      scale_avx2, argmax_avx2,
    moments_avx2, abs_diff_sum_avx2, widen_u32_avx2,
};

}  // namespace

const KernelTable* avx2_table_if_compiled() { return &kAvx2Table; }

}  // namespace specleak::kernels::detail
