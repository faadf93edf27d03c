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
#include <vector>

#include "eqex/corpus.hpp"

namespace eqex::ontology {

// Hard cap and default for prototype-trigger lists.
inline constexpr std::size_t kMaxPrototypes = 8;
inline constexpr std::size_t kDefaultPrototypes = 4;

struct EventTypeDef {
  std::string name;
  std::vector<std::string> roles;       // ordered; defines role-slot order
  std::vector<std::string> prototypes;  // ordered by selection score

  bool operator==(const EventTypeDef&) const = default;
};

struct Ontology {
  std::string name;
  std::vector<EventTypeDef> types;

  const EventTypeDef* find_type(const std::string& type_name) const;

  bool operator==(const Ontology&) const = default;
};

// Sentinel special tokens shared with the vocabulary.
inline constexpr const char* kClsToken = "[CLS]";
inline constexpr const char* kSepToken = "[SEP]";
inline constexpr const char* kEventToken = "[EVENT]";

// Lowercases and splits a type or role name on "-", "_", "/" and whitespace
// into word tokens: "End-Position" -> {"end", "position"}.
std::vector<std::string> name_words(const std::string& name);

// Contiguous token range inside a query sequence, end exclusive.
struct TokenRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - begin; }
};

// A serialized query: the full token sequence fed to the encoder plus the
// regions the model heads need. segments holds 0 for sentence-side positions
// (specials included) and 1 for the query region.
struct QueryTokens {
  std::vector<std::string> tokens;
  std::vector<int> segments;
  TokenRange sentence;             // w_1..w_N positions
  TokenRange query;                // type words + prototypes, or role words
  std::vector<TokenRange> role_slots;  // argument queries only, one per role
  std::size_t other_slot = 0;          // argument queries: final [SEP]
};

// Trigger query: [CLS] [EVENT] [SEP] w_1..w_N [SEP] t p_1..p_K [SEP].
// With use_prototypes false the query region is the type name words only.
QueryTokens build_trigger_query(const std::vector<std::string>& tokens,
                                const EventTypeDef& type_def,
                                bool use_prototypes);

// Argument query: [CLS] w_1..w_N [SEP] g_1 .. g_D [SEP]; the final [SEP]
// is recorded as the representation slot of the Other category.
QueryTokens build_argument_query(const std::vector<std::string>& tokens,
                                 const EventTypeDef& type_def);

// Bare sequence for the entity tagger: [CLS] w_1..w_N [SEP].
QueryTokens build_plain_sequence(const std::vector<std::string>& tokens);

// Top-k trigger words for an event type ranked by f_t / f_o, where f_t
// counts occurrences annotated as triggers of the type and f_o counts all
// (lowercased, space-joined) occurrences of the same word sequence in the
// corpus. Ties break by higher f_t, then lexicographically.
std::vector<std::string> select_prototypes(
    const std::vector<corpus::SentenceExample>& corpus, const Ontology& ont,
    const std::string& event_type, std::size_t k);

// Fills prototypes for every type in place.
void select_all_prototypes(const std::vector<corpus::SentenceExample>& corpus,
                           Ontology& ont, std::size_t k);

// Order-sensitive content hash used to pair checkpoints with the ontology
// they were trained on.
std::uint64_t fingerprint(const Ontology& ont);

Ontology load_ontology(const std::string& path);
void save_ontology(const std::string& path, const Ontology& ont);

// Union of two ontologies. Shared type names must agree on their role lists
// (error otherwise); prototype lists are dropped so they can be re-selected
// on the merged corpus.
Ontology merge_ontologies(const Ontology& a, const Ontology& b);

}  // namespace eqex::ontology
