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
#include <cstdint>
#include <string>

namespace eqex::gradcheck {

struct Result {
  double max_rel_err = 0.0;
  std::size_t checks = 0;       // perturbed coordinates
  std::string worst_site;       // stage/parameter of the worst deviation
};

// Exhaustive-path check of reverse-mode gradients against central finite
// differences (epsilon 1e-4, 64-bit): for each round a fresh tiny model and
// sentence are drawn and each stage's full training loss (CRF NLL, trigger
// cross entropy, argument-grid cross entropy) is differentiated end to end
// through the encoder and every attention feature. A deterministic sample
// of coordinates from every parameter tensor is perturbed.
Result run(std::uint64_t seed, std::size_t rounds);

// Acceptance threshold on the relative error |analytic - fd| / max(1, ...).
inline constexpr double kTolerance = 1e-4;

}  // namespace eqex::gradcheck
