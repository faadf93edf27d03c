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

// Hand-worked oracle cases for the argument head; derivations are in
// tests/fixtures/hand_oracles.md.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "eqex/argument.hpp"
#include "eqex/error.hpp"
#include "eqex/ops.hpp"
#include "eqex/rng.hpp"
#include "eqex/tensor.hpp"
#include "testutil.hpp"

namespace {

using namespace eqex::argument;
using eqex::Rng;
using eqex::ValidationError;
using eqex::ad::ParameterStore;
using eqex::ad::Shape;
using eqex::ad::Tensor;

constexpr double kTol = 1e-9;
const double kSqrt2 = std::sqrt(2.0);

}  // namespace

TEST_CASE("pool_span averages hidden rows") {
  const Tensor hidden = Tensor::of({3, 2}, {1, 2, 3, 4, 5, 6});
  const Tensor head = pool_span(hidden, 0, 2);
  REQUIRE(head.shape() == Shape{2});
  CHECK(std::abs(head.at(0) - 2.0) < kTol);
  CHECK(std::abs(head.at(1) - 3.0) < kTol);
  const Tensor tail = pool_span(hidden, 1, 3);
  CHECK(std::abs(tail.at(0) - 4.0) < kTol);
  CHECK_THROWS_AS(pool_span(hidden, 2, 2), ValidationError);
  CHECK_THROWS_AS(pool_span(hidden, 1, 5), ValidationError);
}

TEST_CASE("trigger-aware fusion matches the hand case") {
  // e = (1,2), r = (3,4): the fused input is [e; r; e*r] = (1,2,3,4,3,8).
  // With W rows picking coordinates 0 and 5, h = (1, 8).
  ParameterStore params;
  params.put("arg.fuse.w", Tensor::leaf({2, 6}, {1, 0, 0, 0, 0, 0,  //
                                                 0, 0, 0, 0, 0, 1}));
  const Tensor entities = Tensor::of({2, 2}, {1, 2, 0, 1});
  const Tensor trigger = Tensor::of({2}, {3, 4});
  const Tensor h = trigger_aware_entities(entities, trigger, params, "arg");
  REQUIRE(h.shape() == Shape{2, 2});
  CHECK(std::abs(h.at(0, 0) - 1.0) < kTol);
  CHECK(std::abs(h.at(0, 1) - 8.0) < kTol);
  // Second entity (0,1): fused input (0,1,3,4,0,4) -> (0, 4).
  CHECK(std::abs(h.at(1, 0) - 0.0) < kTol);
  CHECK(std::abs(h.at(1, 1) - 4.0) < kTol);

  CHECK_THROWS_AS(
      trigger_aware_entities(entities, Tensor::of({3}, {1, 2, 3}), params,
                             "arg"),
      ValidationError);
}

TEST_CASE("similarity matrix is the scaled dot product") {
  const Tensor h = Tensor::of({2, 2}, {1, 2, 0, 1});
  const Tensor g = Tensor::of({1, 2}, {3, 4});
  const Tensor s = similarity_matrix(h, g);
  REQUIRE(s.shape() == Shape{2, 1});
  CHECK(std::abs(s.at(0, 0) - 11.0 / kSqrt2) < kTol);
  CHECK(std::abs(s.at(1, 0) - 4.0 / kSqrt2) < kTol);
  CHECK_THROWS_AS(similarity_matrix(h, Tensor::of({1, 3}, {1, 2, 3})),
                  ValidationError);
}

TEST_CASE("cross flows are unnormalized similarity-weighted sums") {
  // One entity h = (1,2), one role g = (3,4): S = 11/sqrt(2).
  //   entity->role = S * G  = (33, 44) / sqrt(2)
  //   role->entity = S^T * H = (11, 22) / sqrt(2)
  const Tensor h = Tensor::of({1, 2}, {1, 2});
  const Tensor g = Tensor::of({1, 2}, {3, 4});
  const AttentionFlows flows = attention_flows(h, g);
  REQUIRE(flows.entity_to_role.shape() == Shape{1, 2});
  REQUIRE(flows.role_to_entity.shape() == Shape{1, 2});
  CHECK(std::abs(flows.entity_to_role.at(0, 0) - 33.0 / kSqrt2) < kTol);
  CHECK(std::abs(flows.entity_to_role.at(0, 1) - 44.0 / kSqrt2) < kTol);
  CHECK(std::abs(flows.role_to_entity.at(0, 0) - 11.0 / kSqrt2) < kTol);
  CHECK(std::abs(flows.role_to_entity.at(0, 1) - 22.0 / kSqrt2) < kTol);
}

TEST_CASE("self-attention on the identity matches the closed form") {
  // X = I2: scores are 1/sqrt(2) on the diagonal, 0 off it. With
  // a = exp(1/sqrt(2)), row 0 of the output is (a, 1) / (1 + a).
  const Tensor x = Tensor::of({2, 2}, {1, 0, 0, 1});
  const Tensor y = self_attention(x);
  const double a = std::exp(1.0 / kSqrt2);
  CHECK(std::abs(y.at(0, 0) - a / (1.0 + a)) < kTol);
  CHECK(std::abs(y.at(0, 1) - 1.0 / (1.0 + a)) < kTol);
  CHECK(std::abs(y.at(1, 0) - 1.0 / (1.0 + a)) < kTol);
  CHECK(std::abs(y.at(1, 1) - a / (1.0 + a)) < kTol);
}

TEST_CASE("argument cells see zeroed role flows in the Other column") {
  // Weight row 1 reads only the role->entity block (positions 6..7), so the
  // positive logit is 11/sqrt(2) for the real role and exactly 0 for the
  // Other column, whose role-side flows are hard zeros.
  const std::size_t d = 2;
  std::vector<double> w(2 * 6 * d, 0.0);
  w[6 * d + 6] = 1.0;
  ParameterStore params;
  params.put("arg.out.w", Tensor::leaf({2, 6 * d}, std::move(w)));

  const Tensor h = Tensor::of({1, 2}, {1, 2});
  const Tensor g = Tensor::of({1, 2}, {3, 4});
  const Tensor other = Tensor::of({2}, {7, 7});
  const AttentionFlows flows = attention_flows(h, g);
  const auto logits = classify_arguments(h, g, other, flows, params, "arg");
  REQUIRE(logits.size() == 2);  // one role + Other
  REQUIRE(logits[0].shape() == Shape{1, 2});
  CHECK(std::abs(logits[0].at(0, 1) - 11.0 / kSqrt2) < kTol);
  CHECK(logits[1].at(0, 1) == 0.0);

  // A weight row reading the role representation block distinguishes the
  // Other column's separator representation from the role embedding.
  std::vector<double> w2(2 * 6 * d, 0.0);
  w2[6 * d + 2] = 1.0;  // role_rep x-coordinate
  params.put("arg.out.w", Tensor::leaf({2, 6 * d}, std::move(w2)));
  const auto logits2 = classify_arguments(h, g, other, flows, params, "arg");
  CHECK(std::abs(logits2[0].at(0, 1) - 3.0) < kTol);
  CHECK(std::abs(logits2[1].at(0, 1) - 7.0) < kTol);
}

TEST_CASE("argument loss averages the cell cross-entropies") {
  // Uniform logits cost log 2 in every cell regardless of the gold grid.
  const std::vector<Tensor> uniform = {Tensor::zeros({2, 2}),
                                       Tensor::zeros({2, 2})};
  const Tensor loss = argument_loss(uniform, {{1, 0}, {0, 1}});
  CHECK(std::abs(loss.value() - std::log(2.0)) < kTol);

  // Single cell, logits (0, 9), gold positive: softplus(-9).
  const std::vector<Tensor> one = {Tensor::of({1, 2}, {0, 9})};
  CHECK(std::abs(argument_loss(one, {{1}}).value() -
                 std::log1p(std::exp(-9.0))) < kTol);
  // Same cell with gold negative: 9 + softplus(-9).
  CHECK(std::abs(argument_loss(one, {{0}}).value() -
                 (9.0 + std::log1p(std::exp(-9.0)))) < kTol);

  CHECK_THROWS_AS(argument_loss({}, {}), ValidationError);
  CHECK_THROWS_AS(argument_loss(one, {{1, 0}}), ValidationError);
  CHECK_THROWS_AS(argument_loss(one, {{1}, {0}}), ValidationError);
}

TEST_CASE("grid probabilities are per-cell softmaxes") {
  const std::vector<Tensor> logits = {
      Tensor::of({2, 2}, {0, std::log(3.0), 0, 0})};
  const auto probs = grid_probs(logits);
  REQUIRE(probs.size() == 1);
  REQUIRE(probs[0].size() == 2);
  CHECK(std::abs(probs[0][0] - 0.75) < kTol);
  CHECK(std::abs(probs[0][1] - 0.5) < kTol);
}

TEST_CASE("role decoding applies the Other veto first") {
  // Columns: role0, role1, Other. Entity 0 clears both role thresholds and
  // is not vetoed; entity 1 is vetoed outright; entity 2 clears nothing.
  const std::vector<std::vector<double>> grid = {
      {0.9, 0.8, 0.2},   // role 0
      {0.8, 0.7, 0.3},   // role 1
      {0.1, 0.95, 0.4},  // Other
  };
  const auto roles = decode_roles(grid, 0.5);
  REQUIRE(roles.size() == 3);
  CHECK(roles[0] == std::vector<std::size_t>{0, 1});
  CHECK(roles[1].empty());
  CHECK(roles[2].empty());

  // The veto comparison is strict: an Other probability equal to the
  // threshold does not suppress the entity.
  const std::vector<std::vector<double>> edge = {{0.6}, {0.5}};
  const auto kept = decode_roles(edge, 0.5);
  CHECK(kept[0] == std::vector<std::size_t>{0});

  CHECK_THROWS_AS(decode_roles({}, 0.5), ValidationError);
  CHECK_THROWS_AS(decode_roles({{0.5}, {0.5, 0.5}}, 0.5), ValidationError);
}

TEST_CASE("the whole argument block is differentiable") {
  Rng rng(31);
  ParameterStore params;
  init_params(params, "arg", 3, rng);
  Tensor entities = eqex::testutil::rand_leaf(rng, {2, 3});
  Tensor trigger = eqex::testutil::rand_leaf(rng, {3});
  Tensor roles = eqex::testutil::rand_leaf(rng, {2, 3});
  Tensor other = eqex::testutil::rand_leaf(rng, {3});
  std::vector<Tensor> leaves = {entities, trigger, roles, other,
                                params.get("arg.fuse.w"),
                                params.get("arg.out.w")};
  const std::vector<std::vector<int>> gold = {{1, 0}, {0, 0}, {0, 1}};
  const double worst = eqex::testutil::fd_max_rel_err(
      [&]() {
        const Tensor h =
            trigger_aware_entities(entities, trigger, params, "arg");
        const AttentionFlows flows = attention_flows(h, roles);
        return argument_loss(
            classify_arguments(h, roles, other, flows, params, "arg"), gold);
      },
      leaves);
  CHECK(worst < 1e-6);
}
