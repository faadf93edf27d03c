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

#include <cstdint>
#include <string>
#include <vector>

#include "eqex/corpus.hpp"
#include "eqex/ontology.hpp"

namespace eqex::fixture {

struct Fixture {
  ontology::Ontology ontology;
  std::vector<corpus::SentenceExample> sentences;
  std::vector<std::string> entity_types;
};

// Small templated corpus a correct model must be able to memorize:
// 50 sentences over 5 event types (attack, meet, transport, marry, hire)
// with 8 distinct roles, gold entities (some multi-token), sentences with
// several arguments per event, entities filling no role, and 10 sentences
// with no event at all.
Fixture make_overfit_fixture(std::uint64_t seed);

// Corpus for generalization to types never seen in training: 6 single-word
// event types whose trigger token is the type name itself, so a model that
// learned "token resembling the query is a trigger" transfers to new
// queries with no new parameters.
Fixture make_zeroshot_fixture(std::uint64_t seed);

// The training half of the zero-shot type set (the other 3 are eval-only).
std::vector<std::string> zeroshot_seen_types();

}  // namespace eqex::fixture
