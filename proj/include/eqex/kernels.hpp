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

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace eqex::kernels {

// Vector and small-matrix primitives behind the tensor core. Every entry has
// a scalar reference implementation; SIMD backends must agree with it:
//   - add/sub/mul/scale/axpy/max, gemm_nn, gemm_tn: bit-identical (same
//     per-element operation order, no fused multiply-add),
//   - dot/sum/gemm_nt: equal within a small relative tolerance (lane-wise
//     partial sums reassociate the reduction).
//
// Matrices are row-major. gemm_nn: C(m x n) = A(m x k) * B(k x n).
// gemm_nt: C(m x n) = A(m x k) * B(n x k)^T. gemm_tn: C(m x n) =
// A(k x m)^T * B(k x n). With `accumulate` the product is added onto C.
struct Backend {
  const char* name;
  void (*add)(const double* a, const double* b, double* out, std::size_t n);
  void (*sub)(const double* a, const double* b, double* out, std::size_t n);
  void (*mul)(const double* a, const double* b, double* out, std::size_t n);
  void (*scale)(const double* a, double alpha, double* out, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum)(const double* a, std::size_t n);
  double (*max)(const double* a, std::size_t n);
  void (*gemm_nn)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
  void (*gemm_nt)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
  void (*gemm_tn)(std::size_t m, std::size_t k, std::size_t n, const double* a,
                  const double* b, double* c, bool accumulate);
};

// Active backend. Resolved once: EQEX_KERNELS env var ("scalar", "avx2",
// "auto") if set, otherwise the best variant the CPU supports. The choice is
// stable for the lifetime of the process, so repeated runs on one machine
// stay bit-reproducible.
const Backend& active();

// Force a backend by name. Returns false (and leaves the selection untouched)
// when the name is unknown or unsupported on this CPU. "auto" re-runs CPU
// detection.
bool select(std::string_view name);

// nullptr when the name is unknown or unsupported on this CPU.
const Backend* find(std::string_view name);

// Backends usable on this CPU; the scalar reference is always present.
std::vector<const Backend*> available();

const Backend& scalar_backend();

}  // namespace eqex::kernels
