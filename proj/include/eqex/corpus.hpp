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
#include <string>
#include <vector>

namespace eqex::ontology {
struct Ontology;
}

namespace eqex::corpus {

// Token-index span, end exclusive.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - start; }
  bool operator==(const Span&) const = default;
};

struct EntityMention {
  std::string id;
  Span span;
  std::string type;
  bool operator==(const EntityMention&) const = default;
};

struct EventArgument {
  std::string entity_id;
  std::string role;
  bool operator==(const EventArgument&) const = default;
};

// One event instance. The same trigger span may appear in several mentions
// with different types (multi-type triggers are distinct instances), and one
// entity may fill several roles of the same event.
struct EventMention {
  std::string type;
  Span trigger;
  std::vector<EventArgument> arguments;
  bool operator==(const EventMention&) const = default;
};

struct SentenceExample {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<std::string> pos;
  std::vector<EntityMention> entities;
  std::vector<EventMention> events;

  // nullptr when the id does not resolve.
  const EntityMention* find_entity(const std::string& entity_id) const;

  bool operator==(const SentenceExample&) const = default;
};

// The fixed POS inventory: the classic universal tagset (including the
// legacy coordinating-conjunction alias CONJ) plus the catch-all X —
// 18 tags total, listed alphabetically.
const std::vector<std::string>& pos_tagset();

// Index into pos_tagset(); unknown tags map to X.
std::size_t pos_tag_index(const std::string& tag);

// Deterministic rule tagger used when a corpus ships no POS column:
// punctuation and numbers first, then a closed-class lexicon, capitalized
// non-initial tokens as PROPN, suffix rules, default NOUN.
std::vector<std::string> fallback_pos_tag(
    const std::vector<std::string>& tokens);

// JSONL ingestion. Every invariant is validated and reported with the file
// path and line number; nothing is silently dropped. When `ont` is given,
// event types and roles are checked against it. Unknown JSON fields are
// errors in strict mode and warnings otherwise.
std::vector<SentenceExample> load_corpus(const std::string& path,
                                         const ontology::Ontology* ont,
                                         bool strict = true);

void save_corpus(const std::string& path,
                 const std::vector<SentenceExample>& sentences);

// Validation entry point shared by the loader and by code that builds
// sentences programmatically. `where` prefixes error messages.
void validate_sentence(const SentenceExample& sentence,
                       const ontology::Ontology* ont,
                       const std::string& where);

}  // namespace eqex::corpus
