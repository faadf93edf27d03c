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

#include "eqex/argument.hpp"
#include "eqex/corpus.hpp"
#include "eqex/eval.hpp"
#include "eqex/ontology.hpp"
#include "eqex/rng.hpp"
#include "eqex/tensor.hpp"
#include "eqex/vocab.hpp"

namespace eqex::pipeline {

struct TrainConfig {
  std::uint64_t seed = 13;
  std::size_t epochs = 10;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  double dropout = 0.5;
  std::size_t prototypes_k = 4;            // seed triggers per type
  std::size_t attn_avg_layers = 3;         // encoder layers averaged into rho
  double negative_sample_rate = 0.2;       // no-event sentences kept
  std::size_t hidden = 64;
  std::size_t layers = 4;
  std::size_t heads = 4;
  std::size_t max_len = 128;
  std::size_t vocab_min_freq = 1;
  double threshold = 0.5;                  // decode cutoff for both heads
  bool use_prototypes = true;
  bool use_in_context_attn = true;
  bool use_event_type_attn = true;
  bool use_multiway = true;
  bool use_entity_self_attn = true;
  bool use_role_self_attn = true;
  bool use_gold_entities = false;
  bool use_gold_triggers = false;
};

void validate_config(const TrainConfig& cfg);
std::string config_to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const std::string& json_text);
TrainConfig load_config(const std::string& path);
void save_config(const std::string& path, const TrainConfig& cfg);
// Order-sensitive content hash, reported in experiment metadata.
std::string config_fingerprint(const TrainConfig& cfg);

// All state of one trained system. Parameters are split into one store per
// stage so stages can be trained, frozen, and swapped independently.
struct Model {
  TrainConfig config;
  vocab::Vocab vocab;
  ontology::Ontology ontology;
  std::vector<std::string> entity_types;   // tagger label inventory
  std::string stage = "init";              // last trained stage
  ad::ParameterStore tagger;
  ad::ParameterStore trigger;
  ad::ParameterStore argument;
};

// Fresh parameters for all three stages, deterministically derived from
// config.seed. Every value is snapped to 32-bit float precision so that
// in-memory evaluation matches a saved-and-reloaded model bit for bit.
Model init_model(const TrainConfig& cfg, vocab::Vocab vocab,
                 ontology::Ontology ont,
                 std::vector<std::string> entity_types);

// Sorted unique mention types occurring in the corpus.
std::vector<std::string> derive_entity_types(
    const std::vector<corpus::SentenceExample>& sentences);

// Copy of the corpus keeping only events whose type passes the filter;
// entity mentions are untouched.
std::vector<corpus::SentenceExample> filter_events(
    const std::vector<corpus::SentenceExample>& sentences,
    const std::vector<std::string>& keep_types);

// ---------------------------------------------------------------------------
// Per-sentence forward passes (shared by training and prediction)
// ---------------------------------------------------------------------------

// Trigger head forward for one (sentence, event type) query. Feature blocks
// disabled by config flags come back as zero tensors of unchanged shape.
// dropout_rng == nullptr runs deterministically with dropout off.
struct TriggerForward {
  ontology::QueryTokens query;
  ad::Tensor tokens;        // contextual sentence-token rows
  ad::Tensor in_context;    // averaged-attention feature (or zeros)
  ad::Tensor type_attn;     // query-similarity feature (or zeros)
  ad::Tensor pos;           // one-hot part-of-speech rows
  ad::Tensor logits;        // (sentence length x 2)
};
TriggerForward trigger_forward(const Model& model,
                               const corpus::SentenceExample& sentence,
                               const ontology::EventTypeDef& type_def,
                               Rng* dropout_rng);

// Argument head forward for one event instance over a fixed entity table.
// Attention flows disabled by config flags come back as zero tensors.
struct ArgumentForward {
  std::vector<std::string> roles;   // column order; "no role" column appended
  ad::Tensor entities;              // fused trigger-aware entity rows
  ad::Tensor role_reps;             // pooled role-slot rows
  ad::Tensor other_rep;             // final separator representation
  argument::AttentionFlows flows;
  std::vector<ad::Tensor> logits;   // per column, (entities x 2)
};
ArgumentForward argument_forward(
    const Model& model, const corpus::SentenceExample& sentence,
    const std::vector<corpus::EntityMention>& entities,
    const std::string& event_type, corpus::Span trigger_span,
    Rng* dropout_rng);

// Entity tagger: CRF emission scores on the tape (training) and the decoded
// mention list (prediction, deterministic).
ad::Tensor tagger_emissions(const Model& model,
                            const corpus::SentenceExample& sentence,
                            Rng* dropout_rng);
std::vector<corpus::EntityMention> tag_sentence(
    const Model& model, const corpus::SentenceExample& sentence);

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

// Training loss of one sentence for one stage, on the tape: tagger = CRF
// negative log-likelihood per token; trigger = cross entropy over every
// (type, token) pair; argument = cross entropy over every (entity, role)
// cell averaged over the sentence's events. Undefined tensor when the
// sentence contributes nothing to the stage.
ad::Tensor stage_loss(const Model& model, const std::string& stage,
                      const corpus::SentenceExample& sentence,
                      Rng* dropout_rng);

struct StageStats {
  std::string stage;
  std::vector<double> epoch_mean_loss;
};

// Trains one stage ("tagger", "trigger", or "argument") in place on the
// given corpus. Deterministic for a fixed config.seed; ends by snapping the
// trained parameters to 32-bit precision. Throws RuntimeFailure on a
// non-finite loss with the offending sentence in the message.
StageStats train_stage(Model& model, const std::string& stage,
                       const std::vector<corpus::SentenceExample>& train);

// tagger (skipped with use_gold_entities) -> trigger -> argument.
std::vector<StageStats> train_all(
    Model& model, const std::vector<corpus::SentenceExample>& train);

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

// Full decode of a corpus: entities (gold or tagged), triggers per type
// query (or gold), argument grids per trigger. restrict_types limits which
// type queries run (zero-shot evaluation); null means all ontology types.
std::vector<eval::SentencePrediction> predict_corpus(
    const Model& model, const std::vector<corpus::SentenceExample>& data,
    const std::vector<std::string>* restrict_types = nullptr);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

// Binary format: magic "EQEX", u32 version, u32-length-prefixed JSON header
// (config, vocab, ontology fingerprint, entity types, stage, tensor count),
// then per-tensor records: u32-length name, u32 rank, u64 dims, row-major
// 32-bit little-endian values. Same model state -> identical bytes.
void save_checkpoint(const std::string& path, const Model& model);

// The ontology is supplied by the caller and verified against the stored
// fingerprint (ValidationError on mismatch unless force). Truncated or
// malformed files raise RuntimeFailure.
Model load_checkpoint(const std::string& path, ontology::Ontology ont,
                      bool force = false);

// ---------------------------------------------------------------------------
// Experiment protocols
// ---------------------------------------------------------------------------

struct DataSet {
  std::vector<corpus::SentenceExample> sentences;
  ontology::Ontology ontology;
};

struct ExperimentSpec {
  std::string mode;  // supervised | zero-shot | direct-transfer | joint-enhancement
  DataSet train;
  DataSet test;            // empty sentences -> evaluate on train
  DataSet extra;           // second source, joint-enhancement only
  std::vector<std::string> seen_types;  // zero-shot only
  bool sequential = false; // joint: train on extra first, then train
};

struct ExperimentResult {
  eval::ScoreReport report;
  Model model;
  std::vector<eval::SentencePrediction> predictions;
};

// Runs one full protocol: prototype selection (when enabled), vocabulary
// construction, staged training, prediction, scoring. zero-shot trains with
// unseen-type events stripped and prototypes disabled, then scores unseen
// types only; direct-transfer trains on the source and queries the target
// ontology; joint-enhancement merges ontologies (shared names must agree on
// roles) and unions the corpora.
ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const TrainConfig& cfg);

}  // namespace eqex::pipeline
