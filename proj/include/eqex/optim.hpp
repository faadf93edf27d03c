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
#include <map>
#include <string>
#include <vector>

#include "eqex/tensor.hpp"

namespace eqex::ad {

// Adam with bias correction. Moment buffers are keyed by parameter name, so
// one optimizer instance must stay paired with one ParameterStore.
class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);

  // One update over every parameter in the store (name order). Every
  // parameter must carry an accumulated gradient; a missing gradient means
  // the caller forgot backward() and is an error.
  void step(ParameterStore& params);

  std::size_t steps_taken() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  struct Moments {
    std::vector<double> m;
    std::vector<double> v;
  };

  double lr_;
  double beta1_;
  double beta2_;
  double eps_;
  std::size_t t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace eqex::ad
