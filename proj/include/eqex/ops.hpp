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

#include <span>

#include "eqex/rng.hpp"
#include "eqex/tensor.hpp"

namespace eqex::ad {

// Epsilon added to cosine denominators; cos(0, x) is defined as 0.
inline constexpr double kCosineEps = 1e-12;

// Elementwise (same shape).
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double alpha);
// a * s where s is a scalar tensor on the tape.
Tensor scale_by(const Tensor& a, const Tensor& s);

// Broadcasts: v added to every row / v[i] added to row i.
Tensor add_rowvec(const Tensor& m, const Tensor& v);
Tensor add_colvec(const Tensor& m, const Tensor& v);

// Matrix products, row-major rank-2 operands.
Tensor matmul(const Tensor& a, const Tensor& b);     // (m,k)x(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // (m,k)x(n,k)^T
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // (k,m)^T x(k,n)

// Assembly / slicing.
Tensor concat_vec(std::span<const Tensor> parts);   // rank-1 pieces
Tensor concat_cols(std::span<const Tensor> parts);  // rank-2, equal rows
Tensor stack_rows(std::span<const Tensor> rows);    // rank-1 -> rank-2
Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1);
Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1);
Tensor row(const Tensor& a, std::size_t i);          // rank-1
Tensor tile_rows(const Tensor& v, std::size_t n);    // rank-1 -> (n, d)

// Reductions.
Tensor mean_rows(const Tensor& a);  // (r,c) -> (c)
Tensor sum_all(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);  // rank-1 -> scalar

// cos(a, b) = a.b / (|a||b| + eps); exactly 0 when either vector is 0.
Tensor cosine(const Tensor& a, const Tensor& b);

// Softmax family (numerically stable, max-shifted).
Tensor softmax_rows(const Tensor& a);
Tensor softmax_vec(const Tensor& a);
Tensor logsumexp_vec(const Tensor& a);   // rank-1 -> scalar
Tensor logsumexp_cols(const Tensor& a);  // (r,c) -> (c), reduce over rows

// Nonlinearities.
Tensor gelu(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);

// Embedding lookup; duplicate ids accumulate gradient.
Tensor gather_rows(const Tensor& table, const std::vector<int>& ids);

// Inverted dropout; identity when disabled or rate == 0.
Tensor dropout(const Tensor& a, double rate, Rng& rng, bool enabled);

// Sum over rows of -(onehot . log softmax(logits)); onehot is a constant.
// Mean variants are expressed by callers as scale(ce_sum, 1/cells).
Tensor cross_entropy_sum(const Tensor& logits, const Tensor& onehot);

// Forward-only softmax on raw values (decode paths, no tape).
std::vector<double> softmax_values(std::span<const double> logits);

}  // namespace eqex::ad
