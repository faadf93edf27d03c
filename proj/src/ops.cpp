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

#include "eqex/ops.hpp"

#include <cmath>
#include <numbers>

#include "eqex/error.hpp"
#include "eqex/kernels.hpp"

namespace eqex::ad {

namespace {

using kernels::active;

[[noreturn]] void fail(const char* op, const std::string& detail) {
  throw RuntimeFailure(std::string(op) + ": " + detail);
}

void require_defined(const char* op, const Tensor& t) {
  if (!t.defined()) fail(op, "undefined tensor operand");
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    fail(op, "shape mismatch " + shape_str(a.shape()) + " vs " +
                 shape_str(b.shape()));
  }
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    fail(op, "expected rank-" + std::to_string(rank) + " tensor, got " +
                 shape_str(t.shape()));
  }
}

void check_finite(const Node& n) {
  for (double v : n.data) {
    if (!std::isfinite(v)) {
      fail(n.op, "produced a non-finite value");
    }
  }
}

std::shared_ptr<Node> make_node(const char* op, Shape shape,
                                std::vector<double> data,
                                std::vector<std::shared_ptr<Node>> parents) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->parents = std::move(parents);
  for (const auto& p : n->parents) {
    if (p->requires_grad) {
      n->requires_grad = true;
      break;
    }
  }
  if (debug_checks()) check_finite(*n);
  return n;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined("add", a);
  require_defined("add", b);
  require_same_shape("add", a, b);
  std::vector<double> out(a.size());
  active().add(a.values().data(), b.values().data(), out.data(), out.size());
  auto n = make_node("add", a.shape(), std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backprop = [pa, pb](Node& self) {
      const auto& k = active();
      const std::size_t sz = self.grad.size();
      if (pa->requires_grad) {
        k.axpy(1.0, self.grad.data(), pa->ensure_grad().data(), sz);
      }
      if (pb->requires_grad) {
        k.axpy(1.0, self.grad.data(), pb->ensure_grad().data(), sz);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_defined("sub", a);
  require_defined("sub", b);
  require_same_shape("sub", a, b);
  std::vector<double> out(a.size());
  active().sub(a.values().data(), b.values().data(), out.data(), out.size());
  auto n = make_node("sub", a.shape(), std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backprop = [pa, pb](Node& self) {
      const auto& k = active();
      const std::size_t sz = self.grad.size();
      if (pa->requires_grad) {
        k.axpy(1.0, self.grad.data(), pa->ensure_grad().data(), sz);
      }
      if (pb->requires_grad) {
        k.axpy(-1.0, self.grad.data(), pb->ensure_grad().data(), sz);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined("mul", a);
  require_defined("mul", b);
  require_same_shape("mul", a, b);
  std::vector<double> out(a.size());
  active().mul(a.values().data(), b.values().data(), out.data(), out.size());
  auto n = make_node("mul", a.shape(), std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backprop = [pa, pb](Node& self) {
      const std::size_t sz = self.grad.size();
      if (pa->requires_grad) {
        auto& da = pa->ensure_grad();
        for (std::size_t i = 0; i < sz; ++i) {
          da[i] += self.grad[i] * pb->data[i];
        }
      }
      if (pb->requires_grad) {
        auto& db = pb->ensure_grad();
        for (std::size_t i = 0; i < sz; ++i) {
          db[i] += self.grad[i] * pa->data[i];
        }
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor scale(const Tensor& a, double alpha) {
  require_defined("scale", a);
  std::vector<double> out(a.size());
  active().scale(a.values().data(), alpha, out.data(), out.size());
  auto n = make_node("scale", a.shape(), std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, alpha](Node& self) {
      active().axpy(alpha, self.grad.data(), pa->ensure_grad().data(),
                    self.grad.size());
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor scale_by(const Tensor& a, const Tensor& s) {
  require_defined("scale_by", a);
  require_defined("scale_by", s);
  if (s.size() != 1) {
    fail("scale_by", "scale factor must be a scalar, got " +
                         shape_str(s.shape()));
  }
  const double sv = s.values()[0];
  std::vector<double> out(a.size());
  active().scale(a.values().data(), sv, out.data(), out.size());
  auto n =
      make_node("scale_by", a.shape(), std::move(out), {a.node(), s.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* ps = s.node().get();
    n->backprop = [pa, ps, sv](Node& self) {
      const auto& k = active();
      if (pa->requires_grad) {
        k.axpy(sv, self.grad.data(), pa->ensure_grad().data(),
               self.grad.size());
      }
      if (ps->requires_grad) {
        ps->ensure_grad()[0] +=
            k.dot(self.grad.data(), pa->data.data(), self.grad.size());
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor add_rowvec(const Tensor& m, const Tensor& v) {
  require_defined("add_rowvec", m);
  require_defined("add_rowvec", v);
  require_rank("add_rowvec", m, 2);
  require_rank("add_rowvec", v, 1);
  const std::size_t r = m.rows();
  const std::size_t c = m.cols();
  if (v.size() != c) {
    fail("add_rowvec", "vector " + shape_str(v.shape()) +
                           " does not match matrix columns of " +
                           shape_str(m.shape()));
  }
  std::vector<double> out(r * c);
  const auto& k = active();
  for (std::size_t i = 0; i < r; ++i) {
    k.add(m.values().data() + i * c, v.values().data(), out.data() + i * c, c);
  }
  auto n =
      make_node("add_rowvec", m.shape(), std::move(out), {m.node(), v.node()});
  if (n->requires_grad) {
    Node* pm = m.node().get();
    Node* pv = v.node().get();
    n->backprop = [pm, pv, r, c](Node& self) {
      const auto& k = active();
      if (pm->requires_grad) {
        k.axpy(1.0, self.grad.data(), pm->ensure_grad().data(), r * c);
      }
      if (pv->requires_grad) {
        auto& dv = pv->ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
          k.axpy(1.0, self.grad.data() + i * c, dv.data(), c);
        }
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor add_colvec(const Tensor& m, const Tensor& v) {
  require_defined("add_colvec", m);
  require_defined("add_colvec", v);
  require_rank("add_colvec", m, 2);
  require_rank("add_colvec", v, 1);
  const std::size_t r = m.rows();
  const std::size_t c = m.cols();
  if (v.size() != r) {
    fail("add_colvec", "vector " + shape_str(v.shape()) +
                           " does not match matrix rows of " +
                           shape_str(m.shape()));
  }
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    const double vi = v.values()[i];
    for (std::size_t j = 0; j < c; ++j) {
      out[i * c + j] = m.values()[i * c + j] + vi;
    }
  }
  auto n =
      make_node("add_colvec", m.shape(), std::move(out), {m.node(), v.node()});
  if (n->requires_grad) {
    Node* pm = m.node().get();
    Node* pv = v.node().get();
    n->backprop = [pm, pv, r, c](Node& self) {
      const auto& k = active();
      if (pm->requires_grad) {
        k.axpy(1.0, self.grad.data(), pm->ensure_grad().data(), r * c);
      }
      if (pv->requires_grad) {
        auto& dv = pv->ensure_grad();
        for (std::size_t i = 0; i < r; ++i) {
          dv[i] += k.sum(self.grad.data() + i * c, c);
        }
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

namespace {

// Shared checks for the three matmul variants. a_rows/a_cols are the
// *effective* (post-transpose) dimensions.
void require_matmul(const char* op, const Tensor& a, const Tensor& b,
                    std::size_t a_inner, std::size_t b_inner) {
  require_defined(op, a);
  require_defined(op, b);
  require_rank(op, a, 2);
  require_rank(op, b, 2);
  if (a_inner != b_inner) {
    fail(op, "inner dimensions disagree: " + shape_str(a.shape()) + " vs " +
                 shape_str(b.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matmul("matmul", a, b, a.defined() && a.rank() == 2 ? a.cols() : 0,
                 b.defined() && b.rank() == 2 ? b.rows() : 0);
  const std::size_t m = a.rows(), kk = a.cols(), nn = b.cols();
  std::vector<double> out(m * nn, 0.0);
  active().gemm_nn(m, kk, nn, a.values().data(), b.values().data(), out.data(),
                   false);
  auto n = make_node("matmul", {m, nn}, std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backprop = [pa, pb, m, kk, nn](Node& self) {
      const auto& k = active();
      const double* g = self.grad.data();
      if (pa->requires_grad) {
        // dA(m,k) = G(m,n) . B(k,n)^T
        k.gemm_nt(m, nn, kk, g, pb->data.data(), pa->ensure_grad().data(),
                  true);
      }
      if (pb->requires_grad) {
        // dB(k,n) = A(m,k)^T . G(m,n)
        k.gemm_tn(kk, m, nn, pa->data.data(), g, pb->ensure_grad().data(),
                  true);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matmul("matmul_nt", a, b,
                 a.defined() && a.rank() == 2 ? a.cols() : 0,
                 b.defined() && b.rank() == 2 ? b.cols() : 0);
  const std::size_t m = a.rows(), kk = a.cols(), nn = b.rows();
  std::vector<double> out(m * nn, 0.0);
  active().gemm_nt(m, kk, nn, a.values().data(), b.values().data(), out.data(),
                   false);
  auto n =
      make_node("matmul_nt", {m, nn}, std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backprop = [pa, pb, m, kk, nn](Node& self) {
      const auto& k = active();
      const double* g = self.grad.data();
      if (pa->requires_grad) {
        // dA(m,k) = G(m,n) . B(n,k)
        k.gemm_nn(m, nn, kk, g, pb->data.data(), pa->ensure_grad().data(),
                  true);
      }
      if (pb->requires_grad) {
        // dB(n,k) = G(m,n)^T . A(m,k)
        k.gemm_tn(nn, m, kk, g, pa->data.data(), pb->ensure_grad().data(),
                  true);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matmul("matmul_tn", a, b,
                 a.defined() && a.rank() == 2 ? a.rows() : 0,
                 b.defined() && b.rank() == 2 ? b.rows() : 0);
  const std::size_t m = a.cols(), kk = a.rows(), nn = b.cols();
  std::vector<double> out(m * nn, 0.0);
  active().gemm_tn(m, kk, nn, a.values().data(), b.values().data(), out.data(),
                   false);
  auto n =
      make_node("matmul_tn", {m, nn}, std::move(out), {a.node(), b.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backprop = [pa, pb, m, kk, nn](Node& self) {
      const auto& k = active();
      const double* g = self.grad.data();
      if (pa->requires_grad) {
        // dA(k,m) = B(k,n) . G(m,n)^T
        k.gemm_nt(kk, nn, m, pb->data.data(), g, pa->ensure_grad().data(),
                  true);
      }
      if (pb->requires_grad) {
        // dB(k,n) = A(k,m) . G(m,n)
        k.gemm_nn(kk, m, nn, pa->data.data(), g, pb->ensure_grad().data(),
                  true);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor concat_vec(std::span<const Tensor> parts) {
  if (parts.empty()) fail("concat_vec", "no operands");
  std::size_t total = 0;
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(parts.size());
  for (const Tensor& p : parts) {
    require_defined("concat_vec", p);
    if (p.rank() > 1) {
      fail("concat_vec",
           "operands must be scalars or vectors, got " + shape_str(p.shape()));
    }
    total += p.size();
    parents.push_back(p.node());
  }
  std::vector<double> out;
  out.reserve(total);
  for (const Tensor& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  auto n = make_node("concat_vec", {total}, std::move(out), std::move(parents));
  if (n->requires_grad) {
    std::vector<Node*> ps;
    ps.reserve(n->parents.size());
    for (const auto& p : n->parents) ps.push_back(p.get());
    n->backprop = [ps](Node& self) {
      const auto& k = active();
      std::size_t off = 0;
      for (Node* p : ps) {
        const std::size_t sz = p->data.size();
        if (p->requires_grad) {
          k.axpy(1.0, self.grad.data() + off, p->ensure_grad().data(), sz);
        }
        off += sz;
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) fail("concat_cols", "no operands");
  require_defined("concat_cols", parts[0]);
  require_rank("concat_cols", parts[0], 2);
  const std::size_t r = parts[0].rows();
  std::size_t total_cols = 0;
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(parts.size());
  for (const Tensor& p : parts) {
    require_defined("concat_cols", p);
    require_rank("concat_cols", p, 2);
    if (p.rows() != r) {
      fail("concat_cols", "row counts disagree: " +
                              shape_str(parts[0].shape()) + " vs " +
                              shape_str(p.shape()));
    }
    total_cols += p.cols();
    parents.push_back(p.node());
  }
  std::vector<double> out(r * total_cols);
  std::size_t off = 0;
  for (const Tensor& p : parts) {
    const std::size_t c = p.cols();
    for (std::size_t i = 0; i < r; ++i) {
      std::copy_n(p.values().data() + i * c, c,
                  out.data() + i * total_cols + off);
    }
    off += c;
  }
  auto n = make_node("concat_cols", {r, total_cols}, std::move(out),
                     std::move(parents));
  if (n->requires_grad) {
    std::vector<Node*> ps;
    ps.reserve(n->parents.size());
    for (const auto& p : n->parents) ps.push_back(p.get());
    n->backprop = [ps, r, total_cols](Node& self) {
      std::size_t off = 0;
      for (Node* p : ps) {
        const std::size_t c = p->shape[1];
        if (p->requires_grad) {
          auto& dp = p->ensure_grad();
          for (std::size_t i = 0; i < r; ++i) {
            const double* g = self.grad.data() + i * total_cols + off;
            double* d = dp.data() + i * c;
            for (std::size_t j = 0; j < c; ++j) d[j] += g[j];
          }
        }
        off += c;
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor stack_rows(std::span<const Tensor> rows) {
  if (rows.empty()) fail("stack_rows", "no operands");
  require_defined("stack_rows", rows[0]);
  require_rank("stack_rows", rows[0], 1);
  const std::size_t d = rows[0].size();
  std::vector<std::shared_ptr<Node>> parents;
  parents.reserve(rows.size());
  std::vector<double> out;
  out.reserve(rows.size() * d);
  for (const Tensor& v : rows) {
    require_defined("stack_rows", v);
    require_rank("stack_rows", v, 1);
    if (v.size() != d) {
      fail("stack_rows", "row lengths disagree: " +
                             shape_str(rows[0].shape()) + " vs " +
                             shape_str(v.shape()));
    }
    parents.push_back(v.node());
    out.insert(out.end(), v.values().begin(), v.values().end());
  }
  auto n = make_node("stack_rows", {rows.size(), d}, std::move(out),
                     std::move(parents));
  if (n->requires_grad) {
    std::vector<Node*> ps;
    ps.reserve(n->parents.size());
    for (const auto& p : n->parents) ps.push_back(p.get());
    n->backprop = [ps, d](Node& self) {
      const auto& k = active();
      for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i]->requires_grad) {
          k.axpy(1.0, self.grad.data() + i * d, ps[i]->ensure_grad().data(),
                 d);
        }
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor slice_rows(const Tensor& a, std::size_t r0, std::size_t r1) {
  require_defined("slice_rows", a);
  require_rank("slice_rows", a, 2);
  if (r0 > r1 || r1 > a.rows()) {
    fail("slice_rows", "range [" + std::to_string(r0) + ", " +
                           std::to_string(r1) + ") out of bounds for " +
                           shape_str(a.shape()));
  }
  const std::size_t c = a.cols();
  const std::size_t nr = r1 - r0;
  std::vector<double> out(a.values().begin() + r0 * c,
                          a.values().begin() + r1 * c);
  auto n = make_node("slice_rows", {nr, c}, std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, r0, nr, c](Node& self) {
      active().axpy(1.0, self.grad.data(),
                    pa->ensure_grad().data() + r0 * c, nr * c);
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor slice_cols(const Tensor& a, std::size_t c0, std::size_t c1) {
  require_defined("slice_cols", a);
  require_rank("slice_cols", a, 2);
  if (c0 > c1 || c1 > a.cols()) {
    fail("slice_cols", "range [" + std::to_string(c0) + ", " +
                           std::to_string(c1) + ") out of bounds for " +
                           shape_str(a.shape()));
  }
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  const std::size_t nc = c1 - c0;
  std::vector<double> out(r * nc);
  for (std::size_t i = 0; i < r; ++i) {
    std::copy_n(a.values().data() + i * c + c0, nc, out.data() + i * nc);
  }
  auto n = make_node("slice_cols", {r, nc}, std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, c0, r, c, nc](Node& self) {
      auto& da = pa->ensure_grad();
      for (std::size_t i = 0; i < r; ++i) {
        const double* g = self.grad.data() + i * nc;
        double* d = da.data() + i * c + c0;
        for (std::size_t j = 0; j < nc; ++j) d[j] += g[j];
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor row(const Tensor& a, std::size_t i) {
  require_defined("row", a);
  require_rank("row", a, 2);
  if (i >= a.rows()) {
    fail("row", "row " + std::to_string(i) + " out of bounds for " +
                    shape_str(a.shape()));
  }
  const std::size_t c = a.cols();
  std::vector<double> out(a.values().begin() + i * c,
                          a.values().begin() + (i + 1) * c);
  auto n = make_node("row", {c}, std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, i, c](Node& self) {
      active().axpy(1.0, self.grad.data(), pa->ensure_grad().data() + i * c,
                    c);
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor tile_rows(const Tensor& v, std::size_t rows) {
  require_defined("tile_rows", v);
  require_rank("tile_rows", v, 1);
  if (rows == 0) fail("tile_rows", "row count must be positive");
  const std::size_t d = v.size();
  std::vector<double> out(rows * d);
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(v.values().data(), d, out.data() + i * d);
  }
  auto n = make_node("tile_rows", {rows, d}, std::move(out), {v.node()});
  if (n->requires_grad) {
    Node* pv = v.node().get();
    n->backprop = [pv, rows, d](Node& self) {
      const auto& k = active();
      auto& dv = pv->ensure_grad();
      for (std::size_t i = 0; i < rows; ++i) {
        k.axpy(1.0, self.grad.data() + i * d, dv.data(), d);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor mean_rows(const Tensor& a) {
  require_defined("mean_rows", a);
  require_rank("mean_rows", a, 2);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  if (r == 0) fail("mean_rows", "matrix has no rows");
  const double inv = 1.0 / static_cast<double>(r);
  std::vector<double> out(c, 0.0);
  const auto& k = active();
  for (std::size_t i = 0; i < r; ++i) {
    k.axpy(1.0, a.values().data() + i * c, out.data(), c);
  }
  k.scale(out.data(), inv, out.data(), c);
  auto n = make_node("mean_rows", {c}, std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, r, c, inv](Node& self) {
      const auto& k = active();
      auto& da = pa->ensure_grad();
      for (std::size_t i = 0; i < r; ++i) {
        k.axpy(inv, self.grad.data(), da.data() + i * c, c);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor sum_all(const Tensor& a) {
  require_defined("sum_all", a);
  const double total = active().sum(a.values().data(), a.size());
  auto n = make_node("sum_all", {}, {total}, {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa](Node& self) {
      const double g = self.grad[0];
      auto& da = pa->ensure_grad();
      for (double& v : da) v += g;
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor mean_all(const Tensor& a) {
  require_defined("mean_all", a);
  if (a.size() == 0) fail("mean_all", "tensor is empty");
  const double inv = 1.0 / static_cast<double>(a.size());
  const double total = active().sum(a.values().data(), a.size()) * inv;
  auto n = make_node("mean_all", {}, {total}, {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, inv](Node& self) {
      const double g = self.grad[0] * inv;
      auto& da = pa->ensure_grad();
      for (double& v : da) v += g;
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor dot(const Tensor& a, const Tensor& b) {
  require_defined("dot", a);
  require_defined("dot", b);
  require_rank("dot", a, 1);
  require_rank("dot", b, 1);
  require_same_shape("dot", a, b);
  const double d = active().dot(a.values().data(), b.values().data(),
                                a.size());
  auto n = make_node("dot", {}, {d}, {a.node(), b.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backprop = [pa, pb](Node& self) {
      const auto& k = active();
      const double g = self.grad[0];
      const std::size_t sz = pa->data.size();
      if (pa->requires_grad) {
        k.axpy(g, pb->data.data(), pa->ensure_grad().data(), sz);
      }
      if (pb->requires_grad) {
        k.axpy(g, pa->data.data(), pb->ensure_grad().data(), sz);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor cosine(const Tensor& a, const Tensor& b) {
  require_defined("cosine", a);
  require_defined("cosine", b);
  require_rank("cosine", a, 1);
  require_rank("cosine", b, 1);
  require_same_shape("cosine", a, b);
  const auto& k = active();
  const std::size_t sz = a.size();
  const double ab = k.dot(a.values().data(), b.values().data(), sz);
  const double na = std::sqrt(k.dot(a.values().data(), a.values().data(), sz));
  const double nb = std::sqrt(k.dot(b.values().data(), b.values().data(), sz));
  const double denom = na * nb + kCosineEps;
  const double cosv = ab / denom;
  auto n = make_node("cosine", {}, {cosv}, {a.node(), b.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    Node* pb = b.node().get();
    n->backprop = [pa, pb, ab, na, nb, denom](Node& self) {
      const double g = self.grad[0];
      const std::size_t sz = pa->data.size();
      // d cos / d a_i = b_i / denom - ab * nb * (a_i / na) / denom^2;
      // the norm-direction term vanishes for a zero vector.
      if (pa->requires_grad) {
        auto& da = pa->ensure_grad();
        const double c1 = g / denom;
        const double c2 = na > 0.0 ? g * ab * nb / (na * denom * denom) : 0.0;
        for (std::size_t i = 0; i < sz; ++i) {
          da[i] += c1 * pb->data[i] - c2 * pa->data[i];
        }
      }
      if (pb->requires_grad) {
        auto& db = pb->ensure_grad();
        const double c1 = g / denom;
        const double c2 = nb > 0.0 ? g * ab * na / (nb * denom * denom) : 0.0;
        for (std::size_t i = 0; i < sz; ++i) {
          db[i] += c1 * pa->data[i] - c2 * pb->data[i];
        }
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

namespace {

// Stable softmax of `src` into `dst` (both length n).
void softmax_span(const double* src, double* dst, std::size_t n) {
  const double m = active().max(src, n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    dst[j] = std::exp(src[j] - m);
    total += dst[j];
  }
  const double inv = 1.0 / total;
  for (std::size_t j = 0; j < n; ++j) dst[j] *= inv;
}

}  // namespace

Tensor softmax_rows(const Tensor& a) {
  require_defined("softmax_rows", a);
  require_rank("softmax_rows", a, 2);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  std::vector<double> out(r * c);
  for (std::size_t i = 0; i < r; ++i) {
    softmax_span(a.values().data() + i * c, out.data() + i * c, c);
  }
  auto n = make_node("softmax_rows", a.shape(), std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, r, c](Node& self) {
      auto& da = pa->ensure_grad();
      for (std::size_t i = 0; i < r; ++i) {
        const double* y = self.data.data() + i * c;
        const double* g = self.grad.data() + i * c;
        const double s = active().dot(g, y, c);
        double* d = da.data() + i * c;
        for (std::size_t j = 0; j < c; ++j) d[j] += y[j] * (g[j] - s);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor softmax_vec(const Tensor& a) {
  require_defined("softmax_vec", a);
  require_rank("softmax_vec", a, 1);
  const std::size_t c = a.size();
  std::vector<double> out(c);
  softmax_span(a.values().data(), out.data(), c);
  auto n = make_node("softmax_vec", a.shape(), std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, c](Node& self) {
      const double* y = self.data.data();
      const double* g = self.grad.data();
      const double s = active().dot(g, y, c);
      auto& da = pa->ensure_grad();
      for (std::size_t j = 0; j < c; ++j) da[j] += y[j] * (g[j] - s);
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor logsumexp_vec(const Tensor& a) {
  require_defined("logsumexp_vec", a);
  require_rank("logsumexp_vec", a, 1);
  const std::size_t c = a.size();
  const double m = active().max(a.values().data(), c);
  double total = 0.0;
  for (std::size_t j = 0; j < c; ++j) total += std::exp(a.values()[j] - m);
  const double lse = m + std::log(total);
  auto n = make_node("logsumexp_vec", {}, {lse}, {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, c](Node& self) {
      const double g = self.grad[0];
      const double lse = self.data[0];
      auto& da = pa->ensure_grad();
      for (std::size_t j = 0; j < c; ++j) {
        da[j] += g * std::exp(pa->data[j] - lse);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor logsumexp_cols(const Tensor& a) {
  require_defined("logsumexp_cols", a);
  require_rank("logsumexp_cols", a, 2);
  const std::size_t r = a.rows();
  const std::size_t c = a.cols();
  if (r == 0) fail("logsumexp_cols", "matrix has no rows");
  std::vector<double> out(c);
  for (std::size_t j = 0; j < c; ++j) {
    double m = a.values()[j];
    for (std::size_t i = 1; i < r; ++i) m = std::max(m, a.at(i, j));
    double total = 0.0;
    for (std::size_t i = 0; i < r; ++i) total += std::exp(a.at(i, j) - m);
    out[j] = m + std::log(total);
  }
  auto n = make_node("logsumexp_cols", {c}, std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, r, c](Node& self) {
      auto& da = pa->ensure_grad();
      for (std::size_t j = 0; j < c; ++j) {
        const double g = self.grad[j];
        const double lse = self.data[j];
        for (std::size_t i = 0; i < r; ++i) {
          da[i * c + j] += g * std::exp(pa->data[i * c + j] - lse);
        }
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

namespace {

constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
// 1 / sqrt(2 * pi), the standard normal density at 0 scale.
constexpr double kInvSqrt2Pi = std::numbers::inv_sqrtpi / std::numbers::sqrt2;

}  // namespace

Tensor gelu(const Tensor& a) {
  require_defined("gelu", a);
  const std::size_t sz = a.size();
  std::vector<double> out(sz);
  for (std::size_t i = 0; i < sz; ++i) {
    const double x = a.values()[i];
    out[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  auto n = make_node("gelu", a.shape(), std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa](Node& self) {
      auto& da = pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        const double x = pa->data[i];
        const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
        da[i] += self.grad[i] * (cdf + x * pdf);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps) {
  require_defined("layer_norm", x);
  require_defined("layer_norm", gamma);
  require_defined("layer_norm", beta);
  require_rank("layer_norm", x, 2);
  require_rank("layer_norm", gamma, 1);
  require_rank("layer_norm", beta, 1);
  const std::size_t r = x.rows();
  const std::size_t c = x.cols();
  if (gamma.size() != c || beta.size() != c) {
    fail("layer_norm", "scale/shift " + shape_str(gamma.shape()) + "/" +
                           shape_str(beta.shape()) +
                           " do not match feature width of " +
                           shape_str(x.shape()));
  }
  std::vector<double> out(r * c);
  std::vector<double> xhat(r * c);
  std::vector<double> istd(r);
  for (std::size_t i = 0; i < r; ++i) {
    const double* xi = x.values().data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += xi[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      const double d = xi[j] - mu;
      var += d * d;
    }
    var /= static_cast<double>(c);
    istd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      const double xh = (xi[j] - mu) * istd[i];
      xhat[i * c + j] = xh;
      out[i * c + j] = gamma.values()[j] * xh + beta.values()[j];
    }
  }
  auto n = make_node("layer_norm", x.shape(), std::move(out),
                     {x.node(), gamma.node(), beta.node()});
  if (n->requires_grad) {
    Node* px = x.node().get();
    Node* pg = gamma.node().get();
    Node* pb = beta.node().get();
    n->backprop = [px, pg, pb, r, c, xhat = std::move(xhat),
                   istd = std::move(istd)](Node& self) {
      const double inv_c = 1.0 / static_cast<double>(c);
      for (std::size_t i = 0; i < r; ++i) {
        const double* g = self.grad.data() + i * c;
        const double* xh = xhat.data() + i * c;
        if (pg->requires_grad) {
          auto& dg = pg->ensure_grad();
          for (std::size_t j = 0; j < c; ++j) dg[j] += g[j] * xh[j];
        }
        if (pb->requires_grad) {
          auto& db = pb->ensure_grad();
          for (std::size_t j = 0; j < c; ++j) db[j] += g[j];
        }
        if (px->requires_grad) {
          double s1 = 0.0, s2 = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            const double dxh = g[j] * pg->data[j];
            s1 += dxh;
            s2 += dxh * xh[j];
          }
          auto& dx = px->ensure_grad();
          for (std::size_t j = 0; j < c; ++j) {
            const double dxh = g[j] * pg->data[j];
            dx[i * c + j] += istd[i] * (dxh - inv_c * (s1 + xh[j] * s2));
          }
        }
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor gather_rows(const Tensor& table, const std::vector<int>& ids) {
  require_defined("gather_rows", table);
  require_rank("gather_rows", table, 2);
  if (ids.empty()) fail("gather_rows", "no row indices");
  const std::size_t v = table.rows();
  const std::size_t d = table.cols();
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= v) {
      fail("gather_rows", "row index " + std::to_string(ids[i]) +
                              " out of bounds for " +
                              shape_str(table.shape()));
    }
    std::copy_n(table.values().data() + static_cast<std::size_t>(ids[i]) * d,
                d, out.data() + i * d);
  }
  auto n = make_node("gather_rows", {ids.size(), d}, std::move(out),
                     {table.node()});
  if (n->requires_grad) {
    Node* pt = table.node().get();
    n->backprop = [pt, ids, d](Node& self) {
      const auto& k = active();
      auto& dt = pt->ensure_grad();
      for (std::size_t i = 0; i < ids.size(); ++i) {
        k.axpy(1.0, self.grad.data() + i * d,
               dt.data() + static_cast<std::size_t>(ids[i]) * d, d);
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor dropout(const Tensor& a, double rate, Rng& rng, bool enabled) {
  require_defined("dropout", a);
  if (rate < 0.0 || rate >= 1.0) {
    fail("dropout", "rate must be in [0, 1), got " + std::to_string(rate));
  }
  if (!enabled || rate == 0.0) return a;
  const std::size_t sz = a.size();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(sz);
  for (double& m : mask) {
    m = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  std::vector<double> out(sz);
  active().mul(a.values().data(), mask.data(), out.data(), sz);
  auto n = make_node("dropout", a.shape(), std::move(out), {a.node()});
  if (n->requires_grad) {
    Node* pa = a.node().get();
    n->backprop = [pa, mask = std::move(mask)](Node& self) {
      auto& da = pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        da[i] += self.grad[i] * mask[i];
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

Tensor cross_entropy_sum(const Tensor& logits, const Tensor& target) {
  require_defined("cross_entropy_sum", logits);
  require_defined("cross_entropy_sum", target);
  require_rank("cross_entropy_sum", logits, 2);
  require_same_shape("cross_entropy_sum", logits, target);
  if (target.requires_grad()) {
    fail("cross_entropy_sum", "target distribution must not require "
                              "gradients");
  }
  const std::size_t r = logits.rows();
  const std::size_t c = logits.cols();
  const auto& k = active();
  double total = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    const double* x = logits.values().data() + i * c;
    const double* y = target.values().data() + i * c;
    const double m = k.max(x, c);
    double se = 0.0;
    for (std::size_t j = 0; j < c; ++j) se += std::exp(x[j] - m);
    const double lse = m + std::log(se);
    double w = 0.0, xy = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      w += y[j];
      xy += y[j] * x[j];
    }
    total += w * lse - xy;
  }
  auto n = make_node("cross_entropy_sum", {}, {total},
                     {logits.node(), target.node()});
  if (n->requires_grad) {
    Node* px = logits.node().get();
    Node* py = target.node().get();
    n->backprop = [px, py, r, c](Node& self) {
      const double g = self.grad[0];
      auto& dx = px->ensure_grad();
      std::vector<double> p(c);
      for (std::size_t i = 0; i < r; ++i) {
        const double* x = px->data.data() + i * c;
        const double* y = py->data.data() + i * c;
        softmax_span(x, p.data(), c);
        double w = 0.0;
        for (std::size_t j = 0; j < c; ++j) w += y[j];
        for (std::size_t j = 0; j < c; ++j) {
          dx[i * c + j] += g * (w * p[j] - y[j]);
        }
      }
    };
  }
  return Tensor::wrap(std::move(n));
}

std::vector<double> softmax_values(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (!logits.empty()) softmax_span(logits.data(), out.data(), logits.size());
  return out;
}

}  // namespace eqex::ad
