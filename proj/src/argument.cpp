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

#include "eqex/argument.hpp"

#include <cmath>

#include "eqex/error.hpp"
#include "eqex/ops.hpp"

namespace eqex::argument {
namespace {

using ad::Tensor;

void check_matrix(const Tensor& t, const char* what) {
  if (!t.defined() || t.rank() != 2 || t.rows() == 0) {
    throw ValidationError(std::string("argument: ") + what +
                          " must be a non-empty rank-2 tensor");
  }
}

}  // namespace

ad::Tensor pool_span(const ad::Tensor& hidden, std::size_t begin,
                     std::size_t end) {
  check_matrix(hidden, "hidden states");
  if (begin >= end || end > hidden.rows()) {
    throw ValidationError("argument: span [" + std::to_string(begin) + ", " +
                          std::to_string(end) +
                          ") is empty or exceeds sequence length " +
                          std::to_string(hidden.rows()));
  }
  return ad::mean_rows(ad::slice_rows(hidden, begin, end));
}

void init_params(ad::ParameterStore& params, const std::string& ns,
                 std::size_t hidden, Rng& rng) {
  if (hidden == 0) throw ValidationError("argument: hidden must be positive");
  auto gauss = [&rng]() { return rng.normal(0.0, 0.02); };
  params.create(ns + ".fuse.w", {hidden, 3 * hidden}, gauss);
  params.create(ns + ".out.w", {2, 6 * hidden}, gauss);
}

ad::Tensor trigger_aware_entities(const ad::Tensor& entities,
                                  const ad::Tensor& trigger_rep,
                                  const ad::ParameterStore& params,
                                  const std::string& ns) {
  check_matrix(entities, "entity representations");
  if (trigger_rep.rank() != 1 || trigger_rep.size() != entities.cols()) {
    throw ValidationError(
        "argument: trigger representation width does not match entities");
  }
  Tensor tiled = ad::tile_rows(trigger_rep, entities.rows());
  const std::vector<Tensor> parts = {entities, tiled,
                                     ad::mul(entities, tiled)};
  return ad::matmul_nt(ad::concat_cols(parts), params.get(ns + ".fuse.w"));
}

ad::Tensor similarity_matrix(const ad::Tensor& h, const ad::Tensor& g) {
  check_matrix(h, "entity matrix");
  check_matrix(g, "role matrix");
  if (h.cols() != g.cols()) {
    throw ValidationError("argument: entity and role widths differ");
  }
  return ad::scale(ad::matmul_nt(h, g),
                   1.0 / std::sqrt(static_cast<double>(h.cols())));
}

ad::Tensor self_attention(const ad::Tensor& x) {
  check_matrix(x, "self-attention input");
  Tensor scores = ad::scale(ad::matmul_nt(x, x),
                            1.0 / std::sqrt(static_cast<double>(x.cols())));
  return ad::matmul(ad::softmax_rows(scores), x);
}

AttentionFlows attention_flows(const ad::Tensor& h, const ad::Tensor& g) {
  Tensor s = similarity_matrix(h, g);
  AttentionFlows flows;
  flows.entity_to_role = ad::matmul(s, g);
  flows.role_to_entity = ad::matmul_tn(s, h);
  flows.entity_self = self_attention(h);
  flows.role_self = self_attention(g);
  return flows;
}

std::vector<ad::Tensor> classify_arguments(const ad::Tensor& h,
                                           const ad::Tensor& g_roles,
                                           const ad::Tensor& other_rep,
                                           const AttentionFlows& flows,
                                           const ad::ParameterStore& params,
                                           const std::string& ns) {
  check_matrix(h, "entity matrix");
  check_matrix(g_roles, "role matrix");
  const std::size_t m = h.rows();
  const std::size_t d = h.cols();
  const std::size_t num_roles = g_roles.rows();
  if (other_rep.rank() != 1 || other_rep.size() != d) {
    throw ValidationError("argument: other-column representation width "
                          "does not match entities");
  }
  auto check_flow = [&](const Tensor& t, std::size_t rows, const char* what) {
    if (!t.defined() || t.rank() != 2 || t.rows() != rows || t.cols() != d) {
      throw ValidationError(std::string("argument: ") + what +
                            " flow has wrong shape");
    }
  };
  check_flow(flows.entity_to_role, m, "entity-to-role");
  check_flow(flows.role_to_entity, num_roles, "role-to-entity");
  check_flow(flows.entity_self, m, "entity self-attention");
  check_flow(flows.role_self, num_roles, "role self-attention");

  Tensor weights = params.get(ns + ".out.w");
  Tensor zero_block = Tensor::zeros({m, d});
  std::vector<Tensor> logits;
  logits.reserve(num_roles + 1);
  for (std::size_t j = 0; j <= num_roles; ++j) {
    const bool other = j == num_roles;
    Tensor role_rep = other ? other_rep : ad::row(g_roles, j);
    // Role-side attention is zero for the "no role" column: the final
    // separator stands in for it and takes part in no flow.
    Tensor g2e = other ? zero_block
                       : ad::tile_rows(ad::row(flows.role_to_entity, j), m);
    Tensor g2g =
        other ? zero_block : ad::tile_rows(ad::row(flows.role_self, j), m);
    const std::vector<Tensor> parts = {h,
                                       ad::tile_rows(role_rep, m),
                                       flows.entity_to_role,
                                       g2e,
                                       flows.entity_self,
                                       g2g};
    logits.push_back(ad::matmul_nt(ad::concat_cols(parts), weights));
  }
  return logits;
}

ad::Tensor argument_loss(const std::vector<ad::Tensor>& logits_per_role,
                         const std::vector<std::vector<int>>& gold_positive) {
  if (logits_per_role.empty()) {
    throw ValidationError("argument: no role columns to score");
  }
  if (gold_positive.size() != logits_per_role.size()) {
    throw ValidationError("argument: gold grid has " +
                          std::to_string(gold_positive.size()) +
                          " columns, logits have " +
                          std::to_string(logits_per_role.size()));
  }
  const std::size_t m = logits_per_role.front().rows();
  Tensor total;
  for (std::size_t j = 0; j < logits_per_role.size(); ++j) {
    const Tensor& logits = logits_per_role[j];
    if (logits.rank() != 2 || logits.cols() != 2 || logits.rows() != m) {
      throw ValidationError("argument: role column " + std::to_string(j) +
                            " has wrong logit shape");
    }
    if (gold_positive[j].size() != m) {
      throw ValidationError("argument: gold column " + std::to_string(j) +
                            " length does not match entities");
    }
    Tensor target = Tensor::zeros({m, 2});
    auto& v = target.mutable_values();
    for (std::size_t i = 0; i < m; ++i) {
      v[i * 2 + (gold_positive[j][i] ? 1 : 0)] = 1.0;
    }
    Tensor ce = ad::cross_entropy_sum(logits, target);
    total = total.defined() ? ad::add(total, ce) : ce;
  }
  const double cells =
      static_cast<double>(m) * static_cast<double>(logits_per_role.size());
  return ad::scale(total, 1.0 / cells);
}

std::vector<std::vector<double>> grid_probs(
    const std::vector<ad::Tensor>& logits_per_role) {
  std::vector<std::vector<double>> out;
  out.reserve(logits_per_role.size());
  for (const Tensor& logits : logits_per_role) {
    if (logits.rank() != 2 || logits.cols() != 2) {
      throw ValidationError("argument: logits must be (entities x 2)");
    }
    std::vector<double> col(logits.rows());
    for (std::size_t i = 0; i < logits.rows(); ++i) {
      const double a = logits.at(i, 0);
      const double b = logits.at(i, 1);
      const double mx = a > b ? a : b;
      const double ea = std::exp(a - mx);
      const double eb = std::exp(b - mx);
      col[i] = eb / (ea + eb);
    }
    out.push_back(std::move(col));
  }
  return out;
}

std::vector<std::vector<std::size_t>> decode_roles(
    const std::vector<std::vector<double>>& probs_per_role,
    double threshold) {
  if (probs_per_role.empty()) {
    throw ValidationError("argument: empty probability grid");
  }
  const std::size_t num_roles = probs_per_role.size() - 1;
  const std::size_t m = probs_per_role.front().size();
  for (const auto& col : probs_per_role) {
    if (col.size() != m) {
      throw ValidationError("argument: ragged probability grid");
    }
  }
  std::vector<std::vector<std::size_t>> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (probs_per_role[num_roles][i] > threshold) continue;  // vetoed
    for (std::size_t j = 0; j < num_roles; ++j) {
      if (probs_per_role[j][i] > threshold) out[i].push_back(j);
    }
  }
  return out;
}

}  // namespace eqex::argument
