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
#include <cmath>
#include <vector>

#include "doctest.h"
#include "eqex/error.hpp"
#include "eqex/ops.hpp"
#include "eqex/optim.hpp"
#include "eqex/rng.hpp"
#include "eqex/tensor.hpp"
#include "testutil.hpp"

using eqex::Rng;
using eqex::RuntimeFailure;
using namespace eqex::ad;
using eqex::testutil::fd_max_rel_err;
using eqex::testutil::rand_const;
using eqex::testutil::rand_leaf;

namespace {

// Contract an arbitrary-shaped result with a fixed random constant so the
// upstream gradient is non-uniform.
Tensor contract(const Tensor& t, const Tensor& c) { return sum_all(mul(t, c)); }

constexpr double kFdTol = 1e-4;

}  // namespace

TEST_CASE("trivial gradient identities") {
  SUBCASE("loss = sum(w) gives unit gradients") {
    Tensor w = Tensor::leaf({3}, {1.0, 2.0, 3.0});
    backward(sum_all(w));
    CHECK(w.grad() == std::vector<double>{1.0, 1.0, 1.0});
  }
  SUBCASE("loss = 0*w gives zero gradients") {
    Tensor w = Tensor::leaf({3}, {1.0, 2.0, 3.0});
    backward(sum_all(scale(w, 0.0)));
    CHECK(w.grad() == std::vector<double>{0.0, 0.0, 0.0});
  }
  SUBCASE("dot backward is the other operand") {
    Tensor a = Tensor::leaf({2}, {1.0, 2.0});
    Tensor b = Tensor::leaf({2}, {3.0, 4.0});
    backward(dot(a, b));
    CHECK(a.grad() == std::vector<double>{3.0, 4.0});
    CHECK(b.grad() == std::vector<double>{1.0, 2.0});
  }
  SUBCASE("repeated operand accumulates both paths") {
    Tensor w = Tensor::leaf({1}, {3.0});
    backward(sum_all(add(w, w)));
    CHECK(w.grad()[0] == doctest::Approx(2.0));
    w.zero_grad();
    backward(sum_all(mul(w, w)));
    CHECK(w.grad()[0] == doctest::Approx(6.0));
    w.zero_grad();
    // Diamond: w*w + w.
    backward(sum_all(add(mul(w, w), w)));
    CHECK(w.grad()[0] == doctest::Approx(7.0));
  }
  SUBCASE("backward without zeroing accumulates") {
    Tensor w = Tensor::leaf({2}, {1.0, 2.0});
    Tensor loss = sum_all(w);
    backward(loss);
    backward(loss);
    CHECK(w.grad() == std::vector<double>{2.0, 2.0});
  }
  SUBCASE("backward rejects non-scalar losses") {
    Tensor w = Tensor::leaf({2}, {1.0, 2.0});
    CHECK_THROWS_AS(backward(scale(w, 2.0)), RuntimeFailure);
  }
}

TEST_CASE("forward value identities") {
  SUBCASE("cosine of a vector with itself is 1") {
    Tensor v = Tensor::of({3}, {0.3, -1.2, 2.0});
    CHECK(cosine(v, v).value() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("cosine with a zero vector is exactly 0") {
    Tensor z = Tensor::of({3}, {0.0, 0.0, 0.0});
    Tensor v = Tensor::of({3}, {1.0, 2.0, 3.0});
    CHECK(cosine(z, v).value() == 0.0);
    CHECK(cosine(v, z).value() == 0.0);
  }
  SUBCASE("softmax of a constant vector is uniform") {
    Tensor v = Tensor::of({3}, {0.0, 0.0, 0.0});
    auto y = softmax_vec(v).values();
    for (double p : y) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("softmax rows are stochastic") {
    Rng rng(5);
    Tensor m = rand_leaf(rng, {6, 9}, 3.0);
    Tensor y = softmax_rows(m);
    for (std::size_t i = 0; i < 6; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 9; ++j) {
        CHECK(y.at(i, j) >= 0.0);
        s += y.at(i, j);
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  SUBCASE("cross entropy of uniform logits is log(classes)") {
    Tensor logits = Tensor::leaf({1, 3}, {0.0, 0.0, 0.0});
    Tensor onehot = Tensor::of({1, 3}, {1.0, 0.0, 0.0});
    CHECK(cross_entropy_sum(logits, onehot).value() ==
          doctest::Approx(std::log(3.0)).epsilon(1e-12));
  }
  SUBCASE("logsumexp is stable for large inputs") {
    Tensor v = Tensor::of({2}, {1000.0, 1000.0});
    CHECK(logsumexp_vec(v).value() ==
          doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
  }
}

TEST_CASE("shape mismatches report both shapes") {
  Tensor a = Tensor::of({2, 3}, std::vector<double>(6, 1.0));
  Tensor b = Tensor::of({3, 2}, std::vector<double>(6, 1.0));
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("(2, 3)"),
                       RuntimeFailure);
  CHECK_THROWS_WITH_AS(matmul(a, a), doctest::Contains("(2, 3)"),
                       RuntimeFailure);
}

TEST_CASE("debug mode flags non-finite results") {
  set_debug_checks(true);
  Tensor big = Tensor::of({1}, {1e308});
  CHECK_THROWS_AS(add(big, big), RuntimeFailure);
  set_debug_checks(false);
  CHECK_NOTHROW(add(big, big));
}

TEST_CASE("finite differences validate every op") {
  Rng rng(101);

  SUBCASE("elementwise and scaling") {
    Tensor a = rand_leaf(rng, {3, 4});
    Tensor b = rand_leaf(rng, {3, 4});
    Tensor c = rand_const(rng, {3, 4});
    Tensor s = rand_leaf(rng, {});
    CHECK(fd_max_rel_err([&] { return contract(add(a, b), c); }, {a, b}) <
          kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(sub(a, b), c); }, {a, b}) <
          kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(mul(a, b), c); }, {a, b}) <
          kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(scale(a, -1.7), c); }, {a}) <
          kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(scale_by(a, s), c); },
                         {a, s}) < kFdTol);
  }

  SUBCASE("broadcast adds") {
    Tensor m = rand_leaf(rng, {3, 4});
    Tensor vr = rand_leaf(rng, {4});
    Tensor vc = rand_leaf(rng, {3});
    Tensor c = rand_const(rng, {3, 4});
    CHECK(fd_max_rel_err([&] { return contract(add_rowvec(m, vr), c); },
                         {m, vr}) < kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(add_colvec(m, vc), c); },
                         {m, vc}) < kFdTol);
  }

  SUBCASE("matrix products") {
    Tensor a = rand_leaf(rng, {3, 4});
    Tensor b = rand_leaf(rng, {4, 2});
    Tensor bt = rand_leaf(rng, {2, 4});
    Tensor at = rand_leaf(rng, {4, 3});
    Tensor c = rand_const(rng, {3, 2});
    CHECK(fd_max_rel_err([&] { return contract(matmul(a, b), c); }, {a, b}) <
          kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(matmul_nt(a, bt), c); },
                         {a, bt}) < kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(matmul_tn(at, b), c); },
                         {at, b}) < kFdTol);
  }

  SUBCASE("assembly and slicing") {
    Tensor s0 = rand_leaf(rng, {});
    Tensor v1 = rand_leaf(rng, {3});
    Tensor v2 = rand_leaf(rng, {2});
    Tensor cv = rand_const(rng, {6});
    CHECK(fd_max_rel_err(
              [&] {
                std::vector<Tensor> parts = {s0, v1, v2};
                return contract(concat_vec(parts), cv);
              },
              {s0, v1, v2}) < kFdTol);

    Tensor m1 = rand_leaf(rng, {3, 2});
    Tensor m2 = rand_leaf(rng, {3, 4});
    Tensor cm = rand_const(rng, {3, 6});
    CHECK(fd_max_rel_err(
              [&] {
                std::vector<Tensor> parts = {m1, m2};
                return contract(concat_cols(parts), cm);
              },
              {m1, m2}) < kFdTol);

    Tensor r1 = rand_leaf(rng, {4});
    Tensor r2 = rand_leaf(rng, {4});
    Tensor r3 = rand_leaf(rng, {4});
    Tensor cr = rand_const(rng, {3, 4});
    CHECK(fd_max_rel_err(
              [&] {
                std::vector<Tensor> rows = {r1, r2, r3};
                return contract(stack_rows(rows), cr);
              },
              {r1, r2, r3}) < kFdTol);

    Tensor big = rand_leaf(rng, {4, 5});
    Tensor c1 = rand_const(rng, {2, 5});
    Tensor c2 = rand_const(rng, {4, 2});
    Tensor c3 = rand_const(rng, {5});
    CHECK(fd_max_rel_err([&] { return contract(slice_rows(big, 1, 3), c1); },
                         {big}) < kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(slice_cols(big, 2, 4), c2); },
                         {big}) < kFdTol);
    CHECK(fd_max_rel_err([&] { return contract(row(big, 2), c3); }, {big}) <
          kFdTol);

    Tensor v = rand_leaf(rng, {3});
    Tensor ct = rand_const(rng, {4, 3});
    CHECK(fd_max_rel_err([&] { return contract(tile_rows(v, 4), ct); }, {v}) <
          kFdTol);
  }

  SUBCASE("reductions") {
    Tensor m = rand_leaf(rng, {4, 3});
    Tensor cv = rand_const(rng, {3});
    CHECK(fd_max_rel_err([&] { return contract(mean_rows(m), cv); }, {m}) <
          kFdTol);
    CHECK(fd_max_rel_err([&] { return sum_all(m); }, {m}) < kFdTol);
    CHECK(fd_max_rel_err([&] { return mean_all(m); }, {m}) < kFdTol);
    Tensor a = rand_leaf(rng, {5});
    Tensor b = rand_leaf(rng, {5});
    CHECK(fd_max_rel_err([&] { return dot(a, b); }, {a, b}) < kFdTol);
    CHECK(fd_max_rel_err([&] { return cosine(a, b); }, {a, b}) < kFdTol);
  }

  SUBCASE("softmax family") {
    Tensor m = rand_leaf(rng, {3, 4}, 2.0);
    Tensor cm = rand_const(rng, {3, 4});
    CHECK(fd_max_rel_err([&] { return contract(softmax_rows(m), cm); }, {m}) <
          kFdTol);
    Tensor v = rand_leaf(rng, {5}, 2.0);
    Tensor cv = rand_const(rng, {5});
    CHECK(fd_max_rel_err([&] { return contract(softmax_vec(v), cv); }, {v}) <
          kFdTol);
    CHECK(fd_max_rel_err([&] { return logsumexp_vec(v); }, {v}) < kFdTol);
    Tensor cc = rand_const(rng, {4});
    CHECK(fd_max_rel_err([&] { return contract(logsumexp_cols(m), cc); },
                         {m}) < kFdTol);
  }

  SUBCASE("nonlinearities") {
    Tensor m = rand_leaf(rng, {3, 4}, 2.5);
    Tensor cm = rand_const(rng, {3, 4});
    CHECK(fd_max_rel_err([&] { return contract(gelu(m), cm); }, {m}) < kFdTol);

    Tensor x = rand_leaf(rng, {3, 6}, 2.0);
    Tensor gamma = rand_leaf(rng, {6});
    Tensor beta = rand_leaf(rng, {6});
    Tensor cx = rand_const(rng, {3, 6});
    CHECK(fd_max_rel_err(
              [&] { return contract(layer_norm(x, gamma, beta), cx); },
              {x, gamma, beta}) < kFdTol);
  }

  SUBCASE("gather with duplicate rows") {
    Tensor table = rand_leaf(rng, {5, 3});
    Tensor c = rand_const(rng, {4, 3});
    std::vector<int> ids = {0, 2, 2, 4};
    CHECK(fd_max_rel_err([&] { return contract(gather_rows(table, ids), c); },
                         {table}) < kFdTol);
  }

  SUBCASE("dropout with a replayed mask") {
    Tensor a = rand_leaf(rng, {4, 4});
    Tensor c = rand_const(rng, {4, 4});
    CHECK(fd_max_rel_err(
              [&] {
                Rng mask_rng(777);
                return contract(dropout(a, 0.3, mask_rng, true), c);
              },
              {a}) < kFdTol);
  }

  SUBCASE("cross entropy") {
    Tensor logits = rand_leaf(rng, {4, 3}, 2.0);
    Tensor onehot = Tensor::of({4, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0});
    CHECK(fd_max_rel_err([&] { return cross_entropy_sum(logits, onehot); },
                         {logits}) < kFdTol);
  }

  SUBCASE("composite graph mixing many ops") {
    Tensor x = rand_leaf(rng, {4, 6});
    Tensor w1 = rand_leaf(rng, {6, 5});
    Tensor gamma = rand_leaf(rng, {6});
    Tensor beta = rand_leaf(rng, {6});
    Tensor onehot = Tensor::of({4, 5}, [] {
      std::vector<double> v(20, 0.0);
      v[0 * 5 + 1] = 1.0;
      v[1 * 5 + 0] = 1.0;
      v[2 * 5 + 4] = 1.0;
      v[3 * 5 + 2] = 1.0;
      return v;
    }());
    auto loss_fn = [&] {
      Tensor h = layer_norm(x, gamma, beta);
      Tensor logits = gelu(matmul(h, w1));
      Tensor ce = cross_entropy_sum(logits, onehot);
      Tensor reg = mean_all(mul(w1, w1));
      return add(ce, reg);
    };
    CHECK(fd_max_rel_err(loss_fn, {x, w1, gamma, beta}) < kFdTol);
  }
}

TEST_CASE("dropout is the identity when disabled") {
  Rng rng(9);
  Tensor a = rand_leaf(rng, {3, 3});
  Rng mask_rng(1);
  Tensor off = dropout(a, 0.5, mask_rng, false);
  CHECK(off.node().get() == a.node().get());
  Tensor zero_rate = dropout(a, 0.0, mask_rng, true);
  CHECK(zero_rate.node().get() == a.node().get());
}

TEST_CASE("adam follows the hand-rolled update") {
  SUBCASE("first step with unit gradient") {
    ParameterStore store;
    Tensor p = store.create("w", {1}, [] { return 0.0; });
    p.node()->ensure_grad()[0] = 1.0;
    Adam opt(0.1);
    opt.step(store);
    // Hand-rolled: m=0.1*1/bc1=1, v likewise, update = lr/(1+eps).
    const double expected = -0.1 * (1.0 / (1.0 + 1e-8));
    CHECK(p.values()[0] == doctest::Approx(expected).epsilon(1e-15));
    CHECK(p.values()[0] == doctest::Approx(-0.1).epsilon(1e-6));
  }
  SUBCASE("zero gradient leaves the parameter unchanged") {
    ParameterStore store;
    Tensor p = store.create("w", {2}, [] { return 0.75; });
    p.node()->ensure_grad();
    Adam opt(0.05);
    opt.step(store);
    CHECK(p.values()[0] == 0.75);
    CHECK(p.values()[1] == 0.75);
  }
  SUBCASE("constant gradient decreases the parameter monotonically") {
    ParameterStore store;
    Tensor p = store.create("w", {1}, [] { return 1.0; });
    Adam opt(0.01);
    double prev = p.values()[0];
    for (int i = 0; i < 2; ++i) {
      p.zero_grad();
      p.node()->ensure_grad()[0] = 2.0;
      opt.step(store);
      CHECK(p.values()[0] < prev);
      prev = p.values()[0];
    }
  }
  SUBCASE("missing gradient is an error") {
    ParameterStore store;
    store.create("w", {1}, [] { return 0.0; });
    Adam opt(0.1);
    CHECK_THROWS_AS(opt.step(store), RuntimeFailure);
  }
  SUBCASE("optimizing a quadratic converges") {
    ParameterStore store;
    Tensor p = store.create("w", {1}, [] { return 5.0; });
    Adam opt(0.2);
    for (int i = 0; i < 200; ++i) {
      store.zero_grads();
      Tensor loss = mul(p, p);
      backward(sum_all(loss));
      opt.step(store);
    }
    CHECK(std::abs(p.values()[0]) < 1e-2);
  }
}

TEST_CASE("training arithmetic is reproducible across graph rebuilds") {
  Rng rng(42);
  Tensor a = rand_leaf(rng, {8, 8});
  Tensor b = rand_leaf(rng, {8, 8});
  auto build = [&] { return sum_all(gelu(matmul(a, b))).value(); };
  const double first = build();
  for (int i = 0; i < 5; ++i) CHECK(build() == first);
}
