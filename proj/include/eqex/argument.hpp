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

#include "eqex/rng.hpp"
#include "eqex/tensor.hpp"

namespace eqex::argument {

// Mean of the hidden-state rows in [begin, end); errors on an empty span.
ad::Tensor pool_span(const ad::Tensor& hidden, std::size_t begin,
                     std::size_t end);

// Parameters under `ns`: ".fuse.w" (hidden x 3*hidden) fusing each entity
// with the trigger, ".out.w" (2 x 6*hidden) scoring one (entity, role) cell.
void init_params(ad::ParameterStore& params, const std::string& ns,
                 std::size_t hidden, Rng& rng);

// Trigger-aware entity representations, one row per entity:
//   h_i = W [e_i; r; e_i * r]   (elementwise product in the last block).
ad::Tensor trigger_aware_entities(const ad::Tensor& entities,
                                  const ad::Tensor& trigger_rep,
                                  const ad::ParameterStore& params,
                                  const std::string& ns);

// Scaled dot-product similarity S = H G^T / sqrt(d), (entities x roles).
ad::Tensor similarity_matrix(const ad::Tensor& h, const ad::Tensor& g);

// softmax(X X^T / sqrt(d)) X — every row attends over all rows of x.
ad::Tensor self_attention(const ad::Tensor& x);

// The four attention flows of the multiway block. Cross flows are
// unnormalized similarity-weighted sums; self flows are softmax attention.
struct AttentionFlows {
  ad::Tensor entity_to_role;  // S * G          (entities x hidden)
  ad::Tensor role_to_entity;  // S^T * H        (roles x hidden)
  ad::Tensor entity_self;     // self_attention(H)
  ad::Tensor role_self;       // self_attention(G)
};

AttentionFlows attention_flows(const ad::Tensor& h, const ad::Tensor& g);

// Binary logits per role column, including a trailing "no role" column
// scored against `other_rep` with zeroed role-side attention. Each entry is
// (entities x 2); the cell input layout [h_i; g_j; flows...] is fixed, and
// ablated flows are supplied as zero tensors of the same shape.
std::vector<ad::Tensor> classify_arguments(const ad::Tensor& h,
                                           const ad::Tensor& g_roles,
                                           const ad::Tensor& other_rep,
                                           const AttentionFlows& flows,
                                           const ad::ParameterStore& params,
                                           const std::string& ns);

// Mean over all (entity, role) cells of the per-cell cross entropy.
// gold_positive[j][i] is 1 when entity i fills role j (the final column
// marks entities filling no role of this event).
ad::Tensor argument_loss(const std::vector<ad::Tensor>& logits_per_role,
                         const std::vector<std::vector<int>>& gold_positive);

// Positive probability per cell, outer index = role column.
std::vector<std::vector<double>> grid_probs(
    const std::vector<ad::Tensor>& logits_per_role);

// Role indices per entity. An entity whose "no role" column clears the
// threshold is vetoed; otherwise every clearing role column is kept.
std::vector<std::vector<std::size_t>> decode_roles(
    const std::vector<std::vector<double>>& probs_per_role, double threshold);

}  // namespace eqex::argument
