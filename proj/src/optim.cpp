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

#include "eqex/optim.hpp"

#include <cmath>

#include "eqex/error.hpp"

namespace eqex::ad {

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (lr <= 0.0) throw RuntimeFailure("adam: learning rate must be positive");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw RuntimeFailure("adam: betas must lie in [0, 1)");
  }
}

void Adam::step(ParameterStore& params) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& [name, tensor] : params) {
    Tensor t = tensor;  // handle copy; shares the node
    if (!t.has_grad()) {
      throw RuntimeFailure("adam: no gradient for parameter '" + name + "'");
    }
    const std::vector<double>& g = t.grad();
    auto& mom = state_[name];
    if (mom.m.empty()) {
      mom.m.assign(g.size(), 0.0);
      mom.v.assign(g.size(), 0.0);
    } else if (mom.m.size() != g.size()) {
      throw RuntimeFailure("adam: parameter '" + name +
                           "' changed size between steps");
    }
    std::vector<double>& w = t.mutable_values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      mom.m[i] = beta1_ * mom.m[i] + (1.0 - beta1_) * g[i];
      mom.v[i] = beta2_ * mom.v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      w[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

}  // namespace eqex::ad
