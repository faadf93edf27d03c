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

#include "eqex/corpus.hpp"

namespace eqex::eval {

struct ArgumentPred {
  std::string entity_id;
  std::string role;
  double prob = 0.0;
};

struct TriggerPred {
  std::string type;
  corpus::Span span;
  double prob = 0.0;
  std::vector<ArgumentPred> arguments;
};

// One sentence of system output. `entities` is the entity table the
// arguments refer to (gold mentions or tagger output with "sys-N" ids), so
// every argument's span stays resolvable without the gold file.
struct SentencePrediction {
  std::string id;
  std::vector<corpus::EntityMention> entities;
  std::vector<TriggerPred> triggers;
};

// Prediction JSONL, one sentence object per line:
//   {"id": str,
//    "entities": [{"id", "start", "end", "type"}],
//    "triggers": [{"type", "start", "end", "prob",
//                  "arguments": [{"entity_id", "role", "prob"}]}]}
std::vector<SentencePrediction> load_predictions(const std::string& path);
void save_predictions(const std::string& path,
                      const std::vector<SentencePrediction>& predictions);

struct PRF {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;
  double precision() const;  // correct / predicted, 0/0 -> 0
  double recall() const;     // correct / gold, 0/0 -> 0
  double f1() const;         // harmonic mean, 0/0 -> 0
};

struct ScoreReport {
  PRF trigger;
  PRF argument;
  std::map<std::string, PRF> trigger_by_type;
  std::map<std::string, PRF> argument_by_type;  // keyed by event type
  std::map<std::string, std::string> metadata;
};

// Span-and-type exact scoring with greedy one-to-one matching in sentence
// order. A predicted trigger is correct iff an unmatched gold event shares
// its span and type. A predicted argument is correct iff its trigger
// matched and an unmatched gold argument of that event shares its entity
// span and role (spans, not ids, so system entities can match).
// Errors: prediction for an unknown sentence id, duplicate prediction ids,
// argument entity_id missing from the prediction's entity table.
ScoreReport score(const std::vector<corpus::SentenceExample>& gold,
                  const std::vector<SentencePrediction>& predictions);

std::string report_to_json(const ScoreReport& report);
ScoreReport report_from_json(const std::string& json_text);
void save_report(const std::string& path, const ScoreReport& report);
ScoreReport load_report(const std::string& path);

// Aligned text table for terminals.
std::string format_report(const ScoreReport& report);

}  // namespace eqex::eval
