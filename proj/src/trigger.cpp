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

#include "eqex/trigger.hpp"

#include <cmath>

#include "eqex/corpus.hpp"
#include "eqex/error.hpp"
#include "eqex/ops.hpp"

namespace eqex::trigger {
namespace {

using ad::Tensor;

void check_range(const ontology::TokenRange& r, std::size_t limit,
                 const char* what) {
  if (r.begin >= r.end || r.end > limit) {
    throw ValidationError(std::string("trigger: ") + what +
                          " token range is empty or out of bounds");
  }
}

}  // namespace

ad::Tensor event_type_attention(const ad::Tensor& hidden,
                                const ontology::TokenRange& sentence,
                                const ontology::TokenRange& query) {
  if (hidden.rank() != 2) {
    throw ValidationError("trigger: hidden states must be rank 2");
  }
  check_range(sentence, hidden.rows(), "sentence");
  check_range(query, hidden.rows(), "query");
  Tensor words = ad::slice_rows(hidden, sentence.begin, sentence.end);
  Tensor queries = ad::slice_rows(hidden, query.begin, query.end);
  const std::size_t n = words.rows();
  const std::size_t q = queries.rows();
  // Cosine similarity matrix (n x q), assembled scalar by scalar so the
  // normalization of both vectors stays differentiable.
  std::vector<Tensor> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor wi = ad::row(words, i);
    std::vector<Tensor> sims;
    sims.reserve(q);
    for (std::size_t j = 0; j < q; ++j) {
      sims.push_back(ad::cosine(wi, ad::row(queries, j)));
    }
    rows.push_back(ad::concat_vec(sims));
  }
  Tensor coeff = ad::stack_rows(rows);
  return ad::scale(ad::matmul(coeff, queries), 1.0 / static_cast<double>(q));
}

ad::Tensor in_context_attention(const ad::Tensor& hidden,
                                const ad::Tensor& attention_avg,
                                const ontology::TokenRange& sentence) {
  if (hidden.rank() != 2 || attention_avg.rank() != 2) {
    throw ValidationError("trigger: hidden and attention must be rank 2");
  }
  if (attention_avg.rows() != hidden.rows() ||
      attention_avg.cols() != hidden.rows()) {
    throw ValidationError("trigger: attention matrix must be square over "
                          "the full sequence");
  }
  check_range(sentence, hidden.rows(), "sentence");
  Tensor words = ad::slice_rows(hidden, sentence.begin, sentence.end);
  Tensor rho = ad::slice_cols(
      ad::slice_rows(attention_avg, sentence.begin, sentence.end),
      sentence.begin, sentence.end);
  const double n = static_cast<double>(words.rows());
  return ad::scale(ad::matmul(rho, words), 1.0 / n);
}

ad::Tensor pos_features(const std::vector<std::string>& pos_tags) {
  const std::size_t p = corpus::pos_tagset().size();
  Tensor out = Tensor::zeros({pos_tags.size(), p});
  auto& v = out.mutable_values();
  for (std::size_t i = 0; i < pos_tags.size(); ++i) {
    v[i * p + corpus::pos_tag_index(pos_tags[i])] = 1.0;
  }
  return out;
}

void init_params(ad::ParameterStore& params, const std::string& ns,
                 std::size_t hidden, Rng& rng) {
  if (hidden == 0) throw ValidationError("trigger: hidden must be positive");
  const std::size_t in_dim = 3 * hidden + corpus::pos_tagset().size();
  params.create(ns + ".out.w", {2, in_dim},
                [&rng]() { return rng.normal(0.0, 0.02); });
}

ad::Tensor classify_tokens(const ad::Tensor& tokens,
                           const ad::Tensor& in_context,
                           const ad::Tensor& type_attention,
                           const ad::Tensor& pos,
                           const ad::ParameterStore& params,
                           const std::string& ns) {
  const std::vector<Tensor> parts = {tokens, in_context, type_attention, pos};
  return ad::matmul_nt(ad::concat_cols(parts), params.get(ns + ".out.w"));
}

ad::Tensor token_loss(const ad::Tensor& logits,
                      const std::vector<int>& gold_positive) {
  if (logits.rank() != 2 || logits.cols() != 2) {
    throw ValidationError("trigger: logits must be (tokens x 2)");
  }
  if (gold_positive.size() != logits.rows()) {
    throw ValidationError("trigger: gold vector length does not match");
  }
  Tensor target = Tensor::zeros({logits.rows(), 2});
  auto& v = target.mutable_values();
  for (std::size_t i = 0; i < gold_positive.size(); ++i) {
    v[i * 2 + (gold_positive[i] ? 1 : 0)] = 1.0;
  }
  return ad::cross_entropy_sum(logits, target);
}

std::vector<double> positive_probs(const ad::Tensor& logits) {
  if (logits.rank() != 2 || logits.cols() != 2) {
    throw ValidationError("trigger: logits must be (tokens x 2)");
  }
  std::vector<double> out(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const double a = logits.at(i, 0);
    const double b = logits.at(i, 1);
    const double m = a > b ? a : b;
    const double ea = std::exp(a - m);
    const double eb = std::exp(b - m);
    out[i] = eb / (ea + eb);
  }
  return out;
}

std::vector<TokenSpan> decode_spans(const std::vector<double>& probs,
                                    double threshold) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < probs.size()) {
    if (probs[i] <= threshold) {
      ++i;
      continue;
    }
    std::size_t j = i;
    double best = 0.0;
    while (j < probs.size() && probs[j] > threshold) {
      if (probs[j] > best) best = probs[j];
      ++j;
    }
    out.push_back(TokenSpan{i, j, best});
    i = j;
  }
  return out;
}

}  // namespace eqex::trigger
