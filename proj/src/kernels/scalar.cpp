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

#include <cmath>

namespace specleak::kernels::detail {

namespace {

constexpr std::size_t kLanes = 4;

double lane_sum(const double (&acc)[kLanes]) { return (acc[0] + acc[1]) + (acc[2] + acc[3]); }

double sum_scalar(const double* x, std::size_t n) {
  double acc[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += x[i + l];
  }
  double s = lane_sum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += x[i + l] * y[i + l];
  }
  double s = lane_sum(acc);
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void scale_scalar(double* x, std::size_t n, double factor) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= factor;
}

std::size_t argmax_scalar(const double* x, std::size_t n) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (x[i] > x[best]) best = i;
  }
  return best;
}

Moments moments_scalar(const double* x, const double* y, std::size_t n) {
  double sx[kLanes] = {}, sy[kLanes] = {}, sxx[kLanes] = {}, syy[kLanes] = {}, sxy[kLanes] = {};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) {
      const double a = x[i + l];
      const double b = y[i + l];
      sx[l] += a;
      sy[l] += b;
      sxx[l] += a * a;
      syy[l] += b * b;
      sxy[l] += a * b;
    }
  }
  Moments m{lane_sum(sx), lane_sum(sy), lane_sum(sxx), lane_sum(syy), lane_sum(sxy)};
  for (; i < n; ++i) {
    m.sx += x[i];
    m.sy += y[i];
    m.sxx += x[i] * x[i];
    m.syy += y[i] * y[i];
    m.sxy += x[i] * y[i];
  }
  return m;
}

double abs_diff_sum_scalar(const double* x, const double* y, std::size_t n) {
  double acc[kLanes] = {0.0, 0.0, 0.0, 0.0};
  std::size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[l] += std::fabs(x[i + l] - y[i + l]);
  }
  double s = lane_sum(acc);
  for (; i < n; ++i) s += std::fabs(x[i] - y[i]);
  return s;
}

void widen_u32_scalar(const std::uint32_t* in, std::size_t n, double* out, std::size_t out_len) {
  const std::size_t m = n < out_len ? n : out_len;
  for (std::size_t i = 0; i < m; ++i) out[i] = static_cast<double>(in[i]);
  for (std::size_t i = m; i < out_len; ++i) out[i] = 0.0;
}

}  // namespace

const KernelTable kScalarTable{
    Isa::kScalar,  sum_scalar,          dot_scalar,      scale_scalar, argmax_scalar,
    moments_scalar, abs_diff_sum_scalar, widen_u32_scalar,
};

}  // namespace specleak::kernels::detail
