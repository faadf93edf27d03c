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

#include "eqex/tagger.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <set>

#include "eqex/error.hpp"
#include "eqex/ops.hpp"

namespace eqex::tagger {
namespace {

using ad::Tensor;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

BioLabels::BioLabels(std::vector<std::string> entity_types)
    : types_(std::move(entity_types)) {
  if (types_.empty()) {
    throw ValidationError("bio labels: need at least one entity type");
  }
  std::sort(types_.begin(), types_.end());
  if (std::adjacent_find(types_.begin(), types_.end()) != types_.end()) {
    throw ValidationError("bio labels: duplicate entity type");
  }
  names_.reserve(1 + 2 * types_.size());
  names_.push_back("O");
  for (const std::string& t : types_) {
    names_.push_back("B-" + t);
    names_.push_back("I-" + t);
  }
}

const std::string& BioLabels::name(std::size_t label) const {
  if (label >= names_.size()) {
    throw ValidationError("bio labels: index " + std::to_string(label) +
                          " out of range");
  }
  return names_[label];
}

std::size_t BioLabels::index(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  throw ValidationError("bio labels: unknown label '" + name + "'");
}

bool BioLabels::is_begin(std::size_t label) const {
  return label != 0 && (label - 1) % 2 == 0;
}

bool BioLabels::is_inside(std::size_t label) const {
  return label != 0 && (label - 1) % 2 == 1;
}

const std::string& BioLabels::entity_type(std::size_t label) const {
  if (label == 0 || label >= names_.size()) {
    throw ValidationError("bio labels: label " + std::to_string(label) +
                          " carries no entity type");
  }
  return types_[(label - 1) / 2];
}

bool BioLabels::allowed_start(std::size_t label) const {
  return !is_inside(label);
}

bool BioLabels::allowed(std::size_t from, std::size_t to) const {
  if (!is_inside(to)) return true;
  // I-t continues a span of the same type only.
  return (is_begin(from) || is_inside(from)) &&
         (from - 1) / 2 == (to - 1) / 2;
}

std::vector<std::size_t> bio_encode(
    const BioLabels& labels, std::size_t sentence_length,
    const std::vector<corpus::EntityMention>& entities) {
  std::vector<const corpus::EntityMention*> order;
  order.reserve(entities.size());
  for (const auto& e : entities) {
    if (e.span.end > sentence_length) {
      throw ValidationError("bio encode: span of entity '" + e.id +
                            "' exceeds sentence length");
    }
    order.push_back(&e);
  }
  std::sort(order.begin(), order.end(),
            [](const corpus::EntityMention* a, const corpus::EntityMention* b) {
              if (a->span.length() != b->span.length()) {
                return a->span.length() > b->span.length();
              }
              if (a->span.start != b->span.start) {
                return a->span.start < b->span.start;
              }
              return a->type < b->type;
            });
  std::vector<std::size_t> out(sentence_length, 0);
  std::vector<char> taken(sentence_length, 0);
  for (const corpus::EntityMention* e : order) {
    bool free = true;
    for (std::size_t i = e->span.start; i < e->span.end; ++i) {
      if (taken[i]) {
        free = false;
        break;
      }
    }
    if (!free) continue;
    const std::size_t b = labels.index("B-" + e->type);
    for (std::size_t i = e->span.start; i < e->span.end; ++i) {
      out[i] = i == e->span.start ? b : b + 1;
      taken[i] = 1;
    }
  }
  return out;
}

std::vector<corpus::EntityMention> extract_entities(
    const BioLabels& labels, const std::vector<std::size_t>& sequence) {
  std::vector<corpus::EntityMention> out;
  std::size_t i = 0;
  while (i < sequence.size()) {
    const std::size_t l = sequence[i];
    if (l == 0) {
      ++i;
      continue;
    }
    // B- opens a span; a stray I- opens one too rather than being dropped.
    const std::string& type = labels.entity_type(l);
    const std::size_t inside = labels.is_begin(l) ? l + 1 : l;
    std::size_t j = i + 1;
    while (j < sequence.size() && sequence[j] == inside) ++j;
    corpus::EntityMention m;
    m.id = "sys-" + std::to_string(out.size());
    m.span = {i, j};
    m.type = type;
    out.push_back(std::move(m));
    i = j;
  }
  return out;
}

CrfMask bio_mask(const BioLabels& labels) {
  const std::size_t k = labels.size();
  CrfMask mask;
  mask.start_ok.resize(k);
  mask.pair_ok.resize(k * k);
  for (std::size_t i = 0; i < k; ++i) {
    mask.start_ok[i] = labels.allowed_start(i) ? 1 : 0;
    for (std::size_t j = 0; j < k; ++j) {
      mask.pair_ok[i * k + j] = labels.allowed(i, j) ? 1 : 0;
    }
  }
  return mask;
}

namespace {

void check_chain_shapes(const Tensor& emissions, const Tensor& transitions,
                        const Tensor& start, const Tensor& end) {
  if (emissions.rank() != 2) {
    throw ValidationError("crf: emissions must be rank 2");
  }
  const std::size_t k = emissions.cols();
  if (transitions.rank() != 2 || transitions.rows() != k ||
      transitions.cols() != k) {
    throw ValidationError("crf: transitions must be " + std::to_string(k) +
                          " x " + std::to_string(k));
  }
  if (start.rank() != 1 || start.size() != k || end.rank() != 1 ||
      end.size() != k) {
    throw ValidationError("crf: start/end must have one score per label");
  }
  if (emissions.rows() == 0) throw ValidationError("crf: empty sequence");
}

}  // namespace

ad::Tensor crf_log_partition(const ad::Tensor& emissions,
                             const ad::Tensor& transitions,
                             const ad::Tensor& start, const ad::Tensor& end) {
  check_chain_shapes(emissions, transitions, start, end);
  const std::size_t len = emissions.rows();
  // alpha[j] = log sum of scores of all prefixes ending in label j.
  Tensor alpha = ad::add(ad::row(emissions, 0), start);
  for (std::size_t t = 1; t < len; ++t) {
    // scores[i][j] = alpha[i] + transitions[i][j]; reduce over the source.
    Tensor scores = ad::add_colvec(transitions, alpha);
    alpha = ad::add(ad::logsumexp_cols(scores), ad::row(emissions, t));
  }
  return ad::logsumexp_vec(ad::add(alpha, end));
}

ad::Tensor crf_gold_score(const ad::Tensor& emissions,
                          const ad::Tensor& transitions,
                          const ad::Tensor& start, const ad::Tensor& end,
                          const std::vector<std::size_t>& sequence) {
  check_chain_shapes(emissions, transitions, start, end);
  const std::size_t len = emissions.rows();
  const std::size_t k = emissions.cols();
  if (sequence.size() != len) {
    throw ValidationError("crf: gold sequence length " +
                          std::to_string(sequence.size()) +
                          " does not match emissions rows " +
                          std::to_string(len));
  }
  for (std::size_t l : sequence) {
    if (l >= k) {
      throw ValidationError("crf: gold label " + std::to_string(l) +
                            " out of range");
    }
  }
  // Selector constants keep the score on the tape: the gold score is a sum
  // of fixed entries of the parameter tensors.
  Tensor pick_emis = Tensor::zeros({len, k});
  for (std::size_t t = 0; t < len; ++t) {
    pick_emis.mutable_values()[t * k + sequence[t]] = 1.0;
  }
  Tensor count_trans = Tensor::zeros({k, k});
  for (std::size_t t = 1; t < len; ++t) {
    count_trans.mutable_values()[sequence[t - 1] * k + sequence[t]] += 1.0;
  }
  Tensor pick_start = Tensor::zeros({k});
  pick_start.mutable_values()[sequence.front()] = 1.0;
  Tensor pick_end = Tensor::zeros({k});
  pick_end.mutable_values()[sequence.back()] = 1.0;

  Tensor score = ad::add(ad::sum_all(ad::mul(emissions, pick_emis)),
                         ad::sum_all(ad::mul(transitions, count_trans)));
  return ad::add(score, ad::add(ad::dot(start, pick_start),
                                ad::dot(end, pick_end)));
}

ad::Tensor crf_nll(const ad::Tensor& emissions, const ad::Tensor& transitions,
                   const ad::Tensor& start, const ad::Tensor& end,
                   const std::vector<std::size_t>& sequence) {
  return ad::sub(crf_log_partition(emissions, transitions, start, end),
                 crf_gold_score(emissions, transitions, start, end, sequence));
}

std::vector<std::size_t> crf_viterbi(const std::vector<double>& emissions,
                                     std::size_t num_labels,
                                     const std::vector<double>& transitions,
                                     const std::vector<double>& start,
                                     const std::vector<double>& end,
                                     const CrfMask* mask) {
  const std::size_t k = num_labels;
  if (k == 0 || emissions.size() % k != 0) {
    throw ValidationError("viterbi: emissions size not a multiple of labels");
  }
  const std::size_t len = emissions.size() / k;
  if (len == 0) throw ValidationError("viterbi: empty sequence");
  if (transitions.size() != k * k || start.size() != k || end.size() != k) {
    throw ValidationError("viterbi: chain parameter sizes do not match");
  }
  if (mask != nullptr &&
      (mask->start_ok.size() != k || mask->pair_ok.size() != k * k)) {
    throw ValidationError("viterbi: mask sizes do not match label count");
  }

  std::vector<double> delta(len * k, kNegInf);
  std::vector<std::size_t> back(len * k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    if (mask != nullptr && !mask->start_ok[j]) continue;
    delta[j] = start[j] + emissions[j];
  }
  for (std::size_t t = 1; t < len; ++t) {
    for (std::size_t j = 0; j < k; ++j) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t i = 0; i < k; ++i) {
        if (mask != nullptr && !mask->pair_ok[i * k + j]) continue;
        const double cand = delta[(t - 1) * k + i] + transitions[i * k + j];
        if (cand > best) {  // strict: ties keep the smallest source label
          best = cand;
          arg = i;
        }
      }
      if (best == kNegInf) continue;
      delta[t * k + j] = best + emissions[t * k + j];
      back[t * k + j] = arg;
    }
  }
  double best = kNegInf;
  std::size_t arg = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double cand = delta[(len - 1) * k + j] + end[j];
    if (cand > best) {
      best = cand;
      arg = j;
    }
  }
  std::vector<std::size_t> path(len, 0);
  if (best == kNegInf) return path;  // fully masked; fall back to all-O
  path[len - 1] = arg;
  for (std::size_t t = len - 1; t > 0; --t) {
    path[t - 1] = back[t * k + path[t]];
  }
  return path;
}

void init_params(ad::ParameterStore& params, const std::string& ns,
                 std::size_t hidden, std::size_t num_labels, Rng& rng) {
  if (hidden == 0 || num_labels == 0) {
    throw ValidationError("tagger: hidden and label count must be positive");
  }
  params.create(ns + ".emit.w", {num_labels, hidden},
                [&rng]() { return rng.normal(0.0, 0.02); });
  params.create(ns + ".emit.b", {num_labels}, []() { return 0.0; });
  // Chain scores start at zero: the initial model is emission-only.
  params.create(ns + ".trans", {num_labels, num_labels}, []() { return 0.0; });
  params.create(ns + ".start", {num_labels}, []() { return 0.0; });
  params.create(ns + ".end", {num_labels}, []() { return 0.0; });
}

ad::Tensor emission_scores(const ad::Tensor& hidden,
                           const ad::ParameterStore& params,
                           const std::string& ns) {
  return ad::add_rowvec(ad::matmul_nt(hidden, params.get(ns + ".emit.w")),
                        params.get(ns + ".emit.b"));
}

}  // namespace eqex::tagger
