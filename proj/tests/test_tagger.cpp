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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "eqex/error.hpp"
#include "eqex/ops.hpp"
#include "eqex/rng.hpp"
#include "eqex/tagger.hpp"
#include "eqex/tensor.hpp"
#include "testutil.hpp"

namespace {

using namespace eqex::tagger;
using eqex::Rng;
using eqex::ValidationError;
using eqex::ad::Tensor;
using eqex::corpus::EntityMention;

// Brute-force oracle: enumerate every label sequence and aggregate scores on
// plain doubles. Emissions are row-major (len x k).
struct Enumerated {
  double log_partition;
  std::vector<std::size_t> best_sequence;
};

double path_score(const std::vector<double>& em, std::size_t k,
                  const std::vector<double>& trans,
                  const std::vector<double>& start,
                  const std::vector<double>& end,
                  const std::vector<std::size_t>& seq) {
  double s = start[seq.front()] + end[seq.back()];
  for (std::size_t t = 0; t < seq.size(); ++t) s += em[t * k + seq[t]];
  for (std::size_t t = 1; t < seq.size(); ++t) {
    s += trans[seq[t - 1] * k + seq[t]];
  }
  return s;
}

Enumerated enumerate_all(const std::vector<double>& em, std::size_t len,
                         std::size_t k, const std::vector<double>& trans,
                         const std::vector<double>& start,
                         const std::vector<double>& end) {
  std::vector<std::size_t> seq(len, 0);
  std::vector<double> scores;
  Enumerated out;
  double best = -std::numeric_limits<double>::infinity();
  // Odometer enumeration is lexicographic, so keeping only strictly greater
  // maxima reproduces the decoder's smallest-index tie rule.
  while (true) {
    const double s = path_score(em, k, trans, start, end, seq);
    scores.push_back(s);
    if (s > best) {
      best = s;
      out.best_sequence = seq;
    }
    std::size_t pos = len;
    while (pos > 0) {
      --pos;
      if (++seq[pos] < k) break;
      seq[pos] = 0;
      if (pos == 0) {
        double mx = *std::max_element(scores.begin(), scores.end());
        double acc = 0.0;
        for (double v : scores) acc += std::exp(v - mx);
        out.log_partition = mx + std::log(acc);
        return out;
      }
    }
  }
}

BioLabels per_loc_labels() { return BioLabels({"per", "loc"}); }

}  // namespace

TEST_CASE("bio label scheme layout and feasibility") {
  const BioLabels labels = per_loc_labels();
  // Types are sorted, so loc precedes per.
  REQUIRE(labels.size() == 5);
  CHECK(labels.name(0) == "O");
  CHECK(labels.name(1) == "B-loc");
  CHECK(labels.name(2) == "I-loc");
  CHECK(labels.name(3) == "B-per");
  CHECK(labels.name(4) == "I-per");
  CHECK(labels.index("I-per") == 4);
  CHECK(labels.is_begin(3));
  CHECK(!labels.is_begin(4));
  CHECK(labels.is_inside(2));
  CHECK(labels.entity_type(1) == "loc");
  CHECK_THROWS_AS(labels.entity_type(0), ValidationError);
  CHECK_THROWS_AS(labels.index("B-org"), ValidationError);

  CHECK(labels.allowed_start(0));
  CHECK(labels.allowed_start(1));
  CHECK(!labels.allowed_start(2));      // cannot open with I-
  CHECK(labels.allowed(1, 2));          // B-loc -> I-loc
  CHECK(labels.allowed(2, 2));          // I-loc -> I-loc
  CHECK(!labels.allowed(1, 4));         // B-loc -> I-per
  CHECK(!labels.allowed(0, 2));         // O -> I-loc
  CHECK(labels.allowed(0, 3));
  CHECK(labels.allowed(4, 0));

  const CrfMask mask = bio_mask(labels);
  REQUIRE(mask.start_ok.size() == labels.size());
  REQUIRE(mask.pair_ok.size() == labels.size() * labels.size());
  CHECK(mask.start_ok[2] == 0);
  CHECK(mask.pair_ok[1 * labels.size() + 2] == 1);
  CHECK(mask.pair_ok[0 * labels.size() + 2] == 0);
}

TEST_CASE("bio_encode resolves overlaps longest-first") {
  const BioLabels labels = per_loc_labels();

  SUBCASE("disjoint mentions") {
    const std::vector<EntityMention> ents = {{"e0", {0, 2}, "per"},
                                             {"e1", {3, 4}, "loc"}};
    const auto seq = bio_encode(labels, 5, ents);
    const std::vector<std::size_t> expect = {
        labels.index("B-per"), labels.index("I-per"), 0,
        labels.index("B-loc"), 0};
    CHECK(seq == expect);
  }
  SUBCASE("longer span wins an overlap") {
    const std::vector<EntityMention> ents = {{"e0", {1, 2}, "per"},
                                             {"e1", {0, 3}, "loc"}};
    const auto seq = bio_encode(labels, 3, ents);
    const std::vector<std::size_t> expect = {
        labels.index("B-loc"), labels.index("I-loc"), labels.index("I-loc")};
    CHECK(seq == expect);
  }
  SUBCASE("equal length: earlier start wins, then type name") {
    const std::vector<EntityMention> ents = {{"e0", {1, 3}, "per"},
                                             {"e1", {0, 2}, "loc"}};
    const auto earlier = bio_encode(labels, 3, ents);
    CHECK(earlier[0] == labels.index("B-loc"));
    CHECK(earlier[1] == labels.index("I-loc"));
    CHECK(earlier[2] == 0);

    const std::vector<EntityMention> same = {{"e0", {0, 2}, "per"},
                                             {"e1", {0, 2}, "loc"}};
    const auto lex = bio_encode(labels, 2, same);
    CHECK(lex[0] == labels.index("B-loc"));  // "loc" < "per"
  }
}

TEST_CASE("extract_entities inverts encoding and repairs orphans") {
  const BioLabels labels = per_loc_labels();
  const std::vector<EntityMention> ents = {{"a", {0, 2}, "per"},
                                           {"b", {2, 3}, "per"},
                                           {"c", {4, 5}, "loc"}};
  const auto seq = bio_encode(labels, 6, ents);
  const auto back = extract_entities(labels, seq);
  REQUIRE(back.size() == 3);
  CHECK(back[0].id == "sys-0");
  CHECK(back[0].span.start == 0);
  CHECK(back[0].span.end == 2);
  CHECK(back[0].type == "per");
  CHECK(back[1].span.start == 2);
  CHECK(back[1].span.end == 3);
  CHECK(back[2].type == "loc");

  // An I- with no compatible predecessor opens a fresh span.
  const std::vector<std::size_t> orphan = {0, labels.index("I-per"),
                                           labels.index("I-per"), 0};
  const auto repaired = extract_entities(labels, orphan);
  REQUIRE(repaired.size() == 1);
  CHECK(repaired[0].span.start == 1);
  CHECK(repaired[0].span.end == 3);
  CHECK(repaired[0].type == "per");

  // Type switch without B- starts a new mention too.
  const std::vector<std::size_t> switched = {labels.index("B-per"),
                                             labels.index("I-loc")};
  const auto two = extract_entities(labels, switched);
  REQUIRE(two.size() == 2);
  CHECK(two[0].type == "per");
  CHECK(two[1].type == "loc");
}

TEST_CASE("crf log-partition and viterbi match exhaustive enumeration") {
  Rng rng(42);
  for (std::size_t len : {1, 2, 3, 5}) {
    for (std::size_t k : {2, 4}) {
      std::vector<double> em(len * k), trans(k * k), start(k), end(k);
      for (double& v : em) v = 4.0 * rng.uniform() - 2.0;
      for (double& v : trans) v = 3.0 * rng.uniform() - 1.5;
      for (double& v : start) v = 2.0 * rng.uniform() - 1.0;
      for (double& v : end) v = 2.0 * rng.uniform() - 1.0;

      const Enumerated oracle = enumerate_all(em, len, k, trans, start, end);

      const Tensor t_em = Tensor::of({len, k}, em);
      const Tensor t_tr = Tensor::of({k, k}, trans);
      const Tensor t_st = Tensor::of({k}, start);
      const Tensor t_en = Tensor::of({k}, end);
      const Tensor lp = crf_log_partition(t_em, t_tr, t_st, t_en);
      CHECK(std::abs(lp.value() - oracle.log_partition) < 1e-9);

      const auto path = crf_viterbi(em, k, trans, start, end);
      CHECK(path == oracle.best_sequence);
    }
  }
}

TEST_CASE("viterbi ties resolve to the smallest label index") {
  // All-zero scores: every path ties, so the decoder must return all zeros.
  const std::size_t len = 4, k = 3;
  const std::vector<double> em(len * k, 0.0), trans(k * k, 0.0), start(k, 0.0),
      end(k, 0.0);
  const auto path = crf_viterbi(em, k, trans, start, end);
  CHECK(path == std::vector<std::size_t>(len, 0));
}

TEST_CASE("viterbi honours the transition mask") {
  const BioLabels labels = per_loc_labels();
  const CrfMask mask = bio_mask(labels);
  const std::size_t k = labels.size();
  // Emissions scream I-loc everywhere; the mask forces a legal B- opener.
  std::vector<double> em(2 * k, 0.0);
  em[0 * k + labels.index("I-loc")] = 10.0;
  em[1 * k + labels.index("I-loc")] = 10.0;
  const std::vector<double> trans(k * k, 0.0), start(k, 0.0), end(k, 0.0);
  const auto path = crf_viterbi(em, k, trans, start, end, &mask);
  REQUIRE(path.size() == 2);
  CHECK(path[0] == labels.index("B-loc"));
  CHECK(path[1] == labels.index("I-loc"));
}

TEST_CASE("crf gold score and nll agree with direct computation") {
  Rng rng(7);
  const std::size_t len = 3, k = 3;
  std::vector<double> em(len * k), trans(k * k), start(k), end(k);
  for (double& v : em) v = 4.0 * rng.uniform() - 2.0;
  for (double& v : trans) v = 2.0 * rng.uniform() - 1.0;
  for (double& v : start) v = 2.0 * rng.uniform() - 1.0;
  for (double& v : end) v = 2.0 * rng.uniform() - 1.0;
  const std::vector<std::size_t> gold = {2, 0, 1};

  const Tensor t_em = Tensor::of({len, k}, em);
  const Tensor t_tr = Tensor::of({k, k}, trans);
  const Tensor t_st = Tensor::of({k}, start);
  const Tensor t_en = Tensor::of({k}, end);

  const double direct = path_score(em, k, trans, start, end, gold);
  CHECK(std::abs(crf_gold_score(t_em, t_tr, t_st, t_en, gold).value() -
                 direct) < 1e-12);

  const Enumerated oracle = enumerate_all(em, len, k, trans, start, end);
  const double nll = crf_nll(t_em, t_tr, t_st, t_en, gold).value();
  CHECK(std::abs(nll - (oracle.log_partition - direct)) < 1e-9);
}

TEST_CASE("crf nll gradient matches finite differences") {
  Rng rng(19);
  const std::size_t len = 4, k = 3;
  const Tensor em = eqex::testutil::rand_leaf(rng, {len, k});
  const Tensor tr = eqex::testutil::rand_leaf(rng, {k, k});
  const Tensor st = eqex::testutil::rand_leaf(rng, {k});
  const Tensor en = eqex::testutil::rand_leaf(rng, {k});
  const std::vector<std::size_t> gold = {0, 2, 1, 1};

  std::vector<Tensor> leaves = {em, tr, st, en};
  const double worst = eqex::testutil::fd_max_rel_err(
      [&]() { return crf_nll(em, tr, st, en, gold); }, leaves);
  CHECK(worst < 1e-6);
}

TEST_CASE("emission head produces one score row per token") {
  eqex::ad::ParameterStore params;
  Rng rng(3);
  const std::size_t hidden = 6, k = 5;
  init_params(params, "tag", hidden, k, rng);
  CHECK(params.contains("tag.emit.w"));
  CHECK(params.contains("tag.trans"));

  const Tensor states = eqex::testutil::rand_const(rng, {4, hidden});
  const Tensor scores = emission_scores(states, params, "tag");
  CHECK(scores.shape() == eqex::ad::Shape{4, k});
}
