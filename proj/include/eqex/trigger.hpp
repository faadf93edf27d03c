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
#include <string>
#include <vector>

#include "eqex/ontology.hpp"
#include "eqex/rng.hpp"
#include "eqex/tensor.hpp"

namespace eqex::trigger {

// Per-token event-type attention: each sentence token is described by the
// query tokens it resembles,
//   a_i = (1/Q) * sum_j cos(w_i, q_j) * q_j,
// where q_j ranges over the query region (type name plus seed triggers).
// Result is (sentence length x hidden).
ad::Tensor event_type_attention(const ad::Tensor& hidden,
                                const ontology::TokenRange& sentence,
                                const ontology::TokenRange& query);

// Per-token in-context attention: attention-weighted average of the other
// sentence tokens,
//   c_i = (1/N) * sum_j rho_ij * w_j,
// with rho the encoder's averaged self-attention restricted to the sentence
// block. Result is (sentence length x hidden).
ad::Tensor in_context_attention(const ad::Tensor& hidden,
                                const ad::Tensor& attention_avg,
                                const ontology::TokenRange& sentence);

// One-hot part-of-speech features, (sentence length x pos tagset size),
// constant (no gradient).
ad::Tensor pos_features(const std::vector<std::string>& pos_tags);

// Classifier weights under `ns`: ".out.w" of shape (2 x (3*hidden + pos)).
void init_params(ad::ParameterStore& params, const std::string& ns,
                 std::size_t hidden, Rng& rng);

// Binary is-trigger logits per token: rows [token; in-context; type-attn;
// pos] are concatenated and projected to 2 scores (negative, positive).
// Ablated inputs are passed as zero tensors of the same shape so the
// classifier layout never changes.
ad::Tensor classify_tokens(const ad::Tensor& tokens,
                           const ad::Tensor& in_context,
                           const ad::Tensor& type_attention,
                           const ad::Tensor& pos,
                           const ad::ParameterStore& params,
                           const std::string& ns);

// Sum of per-token cross-entropies against binary gold (1 = trigger token
// of the queried type). Callers normalize by (types x tokens).
ad::Tensor token_loss(const ad::Tensor& logits,
                      const std::vector<int>& gold_positive);

// Positive-class probabilities from (N x 2) logits, plain values.
std::vector<double> positive_probs(const ad::Tensor& logits);

struct TokenSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  double prob = 0.0;    // maximum member probability
};

// Maximal runs of tokens whose positive probability exceeds the threshold.
std::vector<TokenSpan> decode_spans(const std::vector<double>& probs,
                                    double threshold);

}  // namespace eqex::trigger
