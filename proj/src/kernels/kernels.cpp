// Copyright 2026 The eqex Authors
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

#include "eqex/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace eqex::kernels {

// Defined in kernels_avx2.cpp; nullptr when the CPU lacks AVX2+FMA.
const Backend* avx2_backend();

namespace {

void s_add(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void s_sub(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void s_mul(const double* a, const double* b, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void s_scale(const double* a, double alpha, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * alpha;
}

void s_axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

double s_dot(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double s_sum(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i];
  return acc;
}

double s_max(const double* a, std::size_t n) {
  double best = a[0];
  for (std::size_t i = 1; i < n; ++i) {
    if (a[i] > best) best = a[i];
  }
  return best;
}

// Broadcast-axpy ordering: every C[i][j] accumulates over l in ascending
// order, which is the ordering SIMD variants must reproduce for the
// bit-exact contract.
void s_gemm_nn(std::size_t m, std::size_t k, std::size_t n, const double* a,
               const double* b, double* c, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = a[i * k + l];
      const double* brow = b + l * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] = crow[j] + ail * brow[j];
    }
  }
}

void s_gemm_nt(std::size_t m, std::size_t k, std::size_t n, const double* a,
               const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = s_dot(arow, b + j * k, k);
      c[i * n + j] = accumulate ? c[i * n + j] + v : v;
    }
  }
}

void s_gemm_tn(std::size_t m, std::size_t k, std::size_t n, const double* a,
               const double* b, double* c, bool accumulate) {
  if (!accumulate) std::memset(c, 0, m * n * sizeof(double));
  for (std::size_t l = 0; l < k; ++l) {
    const double* arow = a + l * m;
    const double* brow = b + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      double* crow = c + i * n;
      const double ali = arow[i];
      for (std::size_t j = 0; j < n; ++j) crow[j] = crow[j] + ali * brow[j];
    }
  }
}

constexpr Backend kScalar = {
    "scalar", s_add,  s_sub,      s_mul,      s_scale,    s_axpy,
    s_dot,    s_sum,  s_max,      s_gemm_nn,  s_gemm_nt,  s_gemm_tn,
};

const Backend* detect_best() {
#if defined(__x86_64__) || defined(_M_X64)
  if (const Backend* avx2 = avx2_backend()) return avx2;
#endif
  return &kScalar;
}

const Backend* resolve_initial() {
  if (const char* env = std::getenv("EQEX_KERNELS")) {
    if (std::string_view(env) == "auto") return detect_best();
    if (const Backend* b = find(env)) return b;
  }
  return detect_best();
}

const Backend*& active_slot() {
  static const Backend* slot = resolve_initial();
  return slot;
}

}  // namespace

const Backend& scalar_backend() { return kScalar; }

const Backend* find(std::string_view name) {
  if (name == "scalar") return &kScalar;
#if defined(__x86_64__) || defined(_M_X64)
  if (name == "avx2") return avx2_backend();
#endif
  return nullptr;
}

std::vector<const Backend*> available() {
  std::vector<const Backend*> out = {&kScalar};
#if defined(__x86_64__) || defined(_M_X64)
  if (const Backend* avx2 = avx2_backend()) out.push_back(avx2);
#endif
  return out;
}

const Backend& active() { return *active_slot(); }

bool select(std::string_view name) {
  if (name == "auto") {
    active_slot() = detect_best();
    return true;
  }
  const Backend* b = find(name);
  if (b == nullptr) return false;
  active_slot() = b;
  return true;
}

}  // namespace eqex::kernels
