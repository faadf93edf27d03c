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

namespace eqex::encoder {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t hidden = 64;   // d; must be divisible by heads
  std::size_t layers = 4;    // L
  std::size_t heads = 4;     // H
  std::size_t max_len = 128;
  std::size_t attn_avg_layers = 3;  // m: final layers whose attention is
                                    // averaged; must be <= layers
};

// hidden: contextual representations, one row per input position.
// attention_avg: mean over all heads of the last m layers of the
// row-softmaxed self-attention; every row sums to 1, and the tensor stays on
// the tape so downstream attention features receive gradients.
struct EncoderOutput {
  ad::Tensor hidden;
  ad::Tensor attention_avg;
};

struct EncodeOptions {
  double dropout = 0.0;  // > 0 requires rng
  Rng* rng = nullptr;
};

// Registers all parameters of one encoder under the `ns` name prefix.
// Distinct prefixes give fully independent encoders.
void init_params(ad::ParameterStore& params, const std::string& ns,
                 const EncoderConfig& cfg, Rng& rng);

// Deterministic forward pass (bit-identical for equal inputs and parameters
// when dropout is off). token_ids and segments must have equal length in
// [1, max_len]; segments are 0 (sentence side) or 1 (query side).
EncoderOutput encode(const std::vector<int>& token_ids,
                     const std::vector<int>& segments,
                     const ad::ParameterStore& params, const std::string& ns,
                     const EncoderConfig& cfg,
                     const EncodeOptions& opts = {});

}  // namespace eqex::encoder
