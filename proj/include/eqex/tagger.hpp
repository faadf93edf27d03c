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

#include "eqex/corpus.hpp"
#include "eqex/rng.hpp"
#include "eqex/tensor.hpp"

namespace eqex::tagger {

// BIO label scheme over a fixed set of entity types. Index 0 is "O"; each
// type (in sorted order) contributes "B-<type>" then "I-<type>".
class BioLabels {
 public:
  explicit BioLabels(std::vector<std::string> entity_types);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t label) const;
  std::size_t index(const std::string& name) const;
  bool is_begin(std::size_t label) const;
  bool is_inside(std::size_t label) const;
  // Entity type of a B-/I- label; throws for "O".
  const std::string& entity_type(std::size_t label) const;
  const std::vector<std::string>& entity_types() const { return types_; }
  const std::vector<std::string>& names() const { return names_; }

  // Scheme feasibility: a sequence may not start with I-, and I-t may only
  // follow B-t or I-t.
  bool allowed_start(std::size_t label) const;
  bool allowed(std::size_t from, std::size_t to) const;

 private:
  std::vector<std::string> types_;
  std::vector<std::string> names_;
};

// Gold label sequence for a sentence. Overlapping mentions are resolved
// greedily, longest span first (ties: earlier start, then lexicographic
// type); losers of an overlap are skipped.
std::vector<std::size_t> bio_encode(
    const BioLabels& labels, std::size_t sentence_length,
    const std::vector<corpus::EntityMention>& entities);

// Inverse of bio_encode for well-formed sequences; an I- with no compatible
// predecessor opens a fresh span. Mention ids are "sys-0", "sys-1", ... in
// sentence order.
std::vector<corpus::EntityMention> extract_entities(
    const BioLabels& labels, const std::vector<std::size_t>& sequence);

// Hard transition constraints for decoding (scores of forbidden moves are
// treated as -inf). Flattened row-major: pair_ok[from * size + to].
struct CrfMask {
  std::vector<char> start_ok;
  std::vector<char> pair_ok;
};

CrfMask bio_mask(const BioLabels& labels);

// Linear-chain CRF over label sequences. All scores are unnormalized
// log-potentials; emissions has one row per token and one column per label.
//
// log_partition stays on the tape (forward algorithm in log space), so the
// negative log-likelihood nll = log_partition - gold_score is differentiable
// in emissions and all chain parameters.
ad::Tensor crf_log_partition(const ad::Tensor& emissions,
                             const ad::Tensor& transitions,
                             const ad::Tensor& start, const ad::Tensor& end);
ad::Tensor crf_gold_score(const ad::Tensor& emissions,
                          const ad::Tensor& transitions,
                          const ad::Tensor& start, const ad::Tensor& end,
                          const std::vector<std::size_t>& sequence);
ad::Tensor crf_nll(const ad::Tensor& emissions, const ad::Tensor& transitions,
                   const ad::Tensor& start, const ad::Tensor& end,
                   const std::vector<std::size_t>& sequence);

// Exact MAP sequence by dynamic programming on plain values. emissions is
// row-major (length x num_labels). Ties resolve to the smallest label index
// path (first maximum wins at every step). mask may be null.
std::vector<std::size_t> crf_viterbi(const std::vector<double>& emissions,
                                     std::size_t num_labels,
                                     const std::vector<double>& transitions,
                                     const std::vector<double>& start,
                                     const std::vector<double>& end,
                                     const CrfMask* mask = nullptr);

// Trainable parameters of the tagging head under `ns`: ".emit.w" (K x d),
// ".emit.b", ".trans" (K x K, from x to), ".start", ".end".
void init_params(ad::ParameterStore& params, const std::string& ns,
                 std::size_t hidden, std::size_t num_labels, Rng& rng);

// Per-token label scores from encoder states: hidden (T x d) -> (T x K).
ad::Tensor emission_scores(const ad::Tensor& hidden,
                           const ad::ParameterStore& params,
                           const std::string& ns);

}  // namespace eqex::tagger
