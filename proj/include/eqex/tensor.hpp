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
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace eqex::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);

// One record on the backward tape. The graph is a DAG of shared_ptr edges,
// rebuilt implicitly by every forward pass and torn down when the last
// Tensor handle goes away.
struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // allocated on first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backprop;  // accumulates into parents' grads

  std::size_t size() const { return data.size(); }
  std::vector<double>& ensure_grad();
};

// Value-semantics handle to a tape node.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  // Constant (no gradient tracking).
  static Tensor of(Shape shape, std::vector<double> data);
  static Tensor scalar(double value);
  // Trainable leaf.
  static Tensor leaf(Shape shape, std::vector<double> data);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  const std::vector<double>& values() const { return node_->data; }
  // Leaf mutation (optimizer updates, test setup). Must not be called on a
  // node that already has children in a live graph.
  std::vector<double>& mutable_values() { return node_->data; }
  double value() const;                     // rank-0 convenience
  double at(std::size_t i) const { return node_->data[i]; }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  const std::vector<double>& grad() const;
  void zero_grad();

  std::shared_ptr<Node>& node() { return node_; }
  const std::shared_ptr<Node>& node() const { return node_; }

  static Tensor wrap(std::shared_ptr<Node> n);

 private:
  std::shared_ptr<Node> node_;
};

// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and
// accumulates into every reachable leaf's grad; repeated calls without
// zero_grad add up. Gradients of intermediate op results are scratch space
// recomputed by each sweep.
void backward(const Tensor& loss);

// When enabled, every op result is checked for NaN/Inf and throws
// RuntimeFailure naming the op. Initial value comes from EQEX_DEBUG=1.
void set_debug_checks(bool enabled);
bool debug_checks();

// Named trainable tensors. Iteration order is name-sorted, which keeps
// optimizer sweeps and checkpoint layout deterministic.
class ParameterStore {
 public:
  Tensor create(const std::string& name, Shape shape,
                const std::function<double()>& init);
  Tensor get(const std::string& name) const;
  bool contains(const std::string& name) const;
  void put(const std::string& name, Tensor t);

  std::vector<std::string> names() const;
  void zero_grads();
  std::size_t total_parameters() const;

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

 private:
  std::map<std::string, Tensor> params_;
};

}  // namespace eqex::ad
