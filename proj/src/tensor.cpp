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

#include "eqex/tensor.hpp"

#include <algorithm>
#include <cstdlib>
#include <unordered_set>

#include "eqex/error.hpp"

namespace eqex::ad {

namespace {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

bool initial_debug() {
  const char* env = std::getenv("EQEX_DEBUG");
  return env != nullptr && env[0] == '1';
}

bool& debug_slot() {
  static bool enabled = initial_debug();
  return enabled;
}

}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

std::vector<double>& Node::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
  return grad;
}

Tensor Tensor::wrap(std::shared_ptr<Node> n) {
  Tensor t;
  t.node_ = std::move(n);
  return t;
}

Tensor Tensor::zeros(Shape shape) {
  auto n = std::make_shared<Node>();
  n->data.assign(shape_numel(shape), 0.0);
  n->shape = std::move(shape);
  return wrap(std::move(n));
}

Tensor Tensor::full(Shape shape, double value) {
  auto n = std::make_shared<Node>();
  n->data.assign(shape_numel(shape), value);
  n->shape = std::move(shape);
  return wrap(std::move(n));
}

Tensor Tensor::of(Shape shape, std::vector<double> data) {
  if (data.size() != shape_numel(shape)) {
    throw RuntimeFailure("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(shape));
  }
  auto n = std::make_shared<Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  return wrap(std::move(n));
}

Tensor Tensor::scalar(double value) { return of({}, {value}); }

Tensor Tensor::leaf(Shape shape, std::vector<double> data) {
  Tensor t = of(std::move(shape), std::move(data));
  t.node()->requires_grad = true;
  return t;
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw RuntimeFailure("rows(): tensor is not rank-2");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw RuntimeFailure("cols(): tensor is not rank-2");
  return node_->shape[1];
}

double Tensor::value() const {
  if (size() != 1) {
    throw RuntimeFailure("value(): tensor " + shape_str(shape()) +
                         " is not a scalar");
  }
  return node_->data[0];
}

double Tensor::at(std::size_t r, std::size_t c) const {
  return node_->data[r * cols() + c];
}

const std::vector<double>& Tensor::grad() const {
  if (node_->grad.empty()) {
    throw RuntimeFailure("grad(): no gradient accumulated for this tensor");
  }
  return node_->grad;
}

void Tensor::zero_grad() { node_->grad.clear(); }

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw RuntimeFailure("backward() requires a scalar loss, got " +
                         (loss.defined() ? shape_str(loss.shape())
                                         : std::string("undefined")));
  }
  Node* root = loss.node().get();
  if (!root->requires_grad) return;

  // Iterative post-order topological sort over the requires_grad subgraph.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root, 0);
  visited.insert(root);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  // Gradients of op results are recomputed from scratch each sweep; only
  // leaves (parameters, constants) accumulate across calls.
  for (Node* node : order) {
    if (!node->parents.empty()) node->grad.clear();
  }
  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backprop && !node->grad.empty()) node->backprop(*node);
  }
}

void set_debug_checks(bool enabled) { debug_slot() = enabled; }
bool debug_checks() { return debug_slot(); }

Tensor ParameterStore::create(const std::string& name, Shape shape,
                              const std::function<double()>& init) {
  if (params_.count(name) != 0) {
    throw RuntimeFailure("parameter already exists: " + name);
  }
  std::vector<double> data(shape_numel(shape));
  for (double& v : data) v = init();
  Tensor t = Tensor::leaf(std::move(shape), std::move(data));
  params_.emplace(name, t);
  return t;
}

Tensor ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw RuntimeFailure("unknown parameter: " + name);
  return it->second;
}

bool ParameterStore::contains(const std::string& name) const {
  return params_.count(name) != 0;
}

void ParameterStore::put(const std::string& name, Tensor t) {
  if (!t.defined()) throw RuntimeFailure("put(): undefined tensor: " + name);
  t.node()->requires_grad = true;
  params_[name] = std::move(t);
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, t] : params_) out.push_back(name);
  return out;
}

void ParameterStore::zero_grads() {
  for (auto& [name, t] : params_) t.zero_grad();
}

std::size_t ParameterStore::total_parameters() const {
  std::size_t n = 0;
  for (const auto& [name, t] : params_) n += t.size();
  return n;
}

}  // namespace eqex::ad
