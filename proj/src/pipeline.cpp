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

#include "eqex/pipeline.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "eqex/encoder.hpp"
#include "eqex/error.hpp"
#include "eqex/log.hpp"
#include "eqex/ops.hpp"
#include "eqex/optim.hpp"
#include "eqex/tagger.hpp"
#include "eqex/trigger.hpp"
#include "json.hpp"

namespace eqex::pipeline {
namespace {

using ad::Tensor;
using corpus::SentenceExample;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kMagic[4] = {'E', 'Q', 'E', 'X'};

encoder::EncoderConfig encoder_config(const TrainConfig& cfg,
                                      std::size_t vocab_size) {
  encoder::EncoderConfig ec;
  ec.vocab_size = vocab_size;
  ec.hidden = cfg.hidden;
  ec.layers = cfg.layers;
  ec.heads = cfg.heads;
  ec.max_len = cfg.max_len;
  ec.attn_avg_layers = cfg.attn_avg_layers;
  return ec;
}

// Every parameter is held at 32-bit precision between stages, so an
// in-memory model and its saved-then-reloaded copy are bit-identical.
void snap_store_f32(ad::ParameterStore& store) {
  for (const auto& [name, tensor] : store) {
    Tensor t = tensor;
    for (double& v : t.mutable_values()) {
      v = static_cast<double>(static_cast<float>(v));
    }
  }
}

const std::vector<std::string>& sentence_pos(const SentenceExample& s,
                                             std::vector<std::string>& fallback) {
  if (!s.pos.empty()) return s.pos;
  fallback = corpus::fallback_pos_tag(s.tokens);
  return fallback;
}

encoder::EncodeOptions encode_opts(const Model& model, Rng* dropout_rng) {
  encoder::EncodeOptions opts;
  if (dropout_rng != nullptr && model.config.dropout > 0.0) {
    opts.dropout = model.config.dropout;
    opts.rng = dropout_rng;
  }
  return opts;
}

Tensor maybe_dropout(const Tensor& x, const Model& model, Rng* dropout_rng) {
  if (dropout_rng == nullptr || model.config.dropout <= 0.0) return x;
  return ad::dropout(x, model.config.dropout, *dropout_rng, true);
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << std::hex << std::setfill('0') << std::setw(16) << v;
  return out.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void validate_config(const TrainConfig& cfg) {
  auto in_unit = [](double v) { return v > 0.0 && v <= 1.0; };
  if (cfg.learning_rate <= 0.0) {
    throw ValidationError("config: learning_rate must be positive");
  }
  if (cfg.batch_size == 0) {
    throw ValidationError("config: batch_size must be positive");
  }
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0) {
    throw ValidationError("config: dropout must be in [0, 1)");
  }
  if (!in_unit(cfg.negative_sample_rate)) {
    throw ValidationError("config: negative_sample_rate must be in (0, 1]");
  }
  if (cfg.threshold <= 0.0 || cfg.threshold >= 1.0) {
    throw ValidationError("config: threshold must be in (0, 1)");
  }
  if (cfg.prototypes_k == 0 || cfg.prototypes_k > ontology::kMaxPrototypes) {
    throw ValidationError("config: prototypes_k must be in [1, " +
                          std::to_string(ontology::kMaxPrototypes) + "]");
  }
  if (cfg.hidden == 0 || cfg.layers == 0 || cfg.heads == 0 ||
      cfg.max_len == 0) {
    throw ValidationError("config: model dimensions must be positive");
  }
  if (cfg.hidden % cfg.heads != 0) {
    throw ValidationError("config: hidden must be divisible by heads");
  }
  if (cfg.attn_avg_layers == 0 || cfg.attn_avg_layers > cfg.layers) {
    throw ValidationError("config: attn_avg_layers must be in [1, layers]");
  }
  if (cfg.vocab_min_freq == 0) {
    throw ValidationError("config: vocab_min_freq must be positive");
  }
}

std::string config_to_json(const TrainConfig& cfg) {
  ordered_json obj;
  obj["seed"] = cfg.seed;
  obj["epochs"] = cfg.epochs;
  obj["learning_rate"] = cfg.learning_rate;
  obj["batch_size"] = cfg.batch_size;
  obj["dropout"] = cfg.dropout;
  obj["prototypes_k"] = cfg.prototypes_k;
  obj["attn_avg_layers"] = cfg.attn_avg_layers;
  obj["negative_sample_rate"] = cfg.negative_sample_rate;
  obj["hidden"] = cfg.hidden;
  obj["layers"] = cfg.layers;
  obj["heads"] = cfg.heads;
  obj["max_len"] = cfg.max_len;
  obj["vocab_min_freq"] = cfg.vocab_min_freq;
  obj["threshold"] = cfg.threshold;
  obj["use_prototypes"] = cfg.use_prototypes;
  obj["use_in_context_attn"] = cfg.use_in_context_attn;
  obj["use_event_type_attn"] = cfg.use_event_type_attn;
  obj["use_multiway"] = cfg.use_multiway;
  obj["use_entity_self_attn"] = cfg.use_entity_self_attn;
  obj["use_role_self_attn"] = cfg.use_role_self_attn;
  obj["use_gold_entities"] = cfg.use_gold_entities;
  obj["use_gold_triggers"] = cfg.use_gold_triggers;
  return obj.dump(2);
}

TrainConfig config_from_json(const std::string& json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ValidationError("config: expected JSON object");
  TrainConfig cfg;
  const std::set<std::string> known = {
      "seed", "epochs", "learning_rate", "batch_size", "dropout",
      "prototypes_k", "attn_avg_layers", "negative_sample_rate", "hidden",
      "layers", "heads", "max_len", "vocab_min_freq", "threshold",
      "use_prototypes", "use_in_context_attn", "use_event_type_attn",
      "use_multiway", "use_entity_self_attn", "use_role_self_attn",
      "use_gold_entities", "use_gold_triggers"};
  for (const auto& [key, value] : obj.items()) {
    if (known.find(key) == known.end()) {
      throw ValidationError("config: unknown field '" + key + "'");
    }
  }
  try {
    cfg.seed = obj.value("seed", cfg.seed);
    cfg.epochs = obj.value("epochs", cfg.epochs);
    cfg.learning_rate = obj.value("learning_rate", cfg.learning_rate);
    cfg.batch_size = obj.value("batch_size", cfg.batch_size);
    cfg.dropout = obj.value("dropout", cfg.dropout);
    cfg.prototypes_k = obj.value("prototypes_k", cfg.prototypes_k);
    cfg.attn_avg_layers = obj.value("attn_avg_layers", cfg.attn_avg_layers);
    cfg.negative_sample_rate =
        obj.value("negative_sample_rate", cfg.negative_sample_rate);
    cfg.hidden = obj.value("hidden", cfg.hidden);
    cfg.layers = obj.value("layers", cfg.layers);
    cfg.heads = obj.value("heads", cfg.heads);
    cfg.max_len = obj.value("max_len", cfg.max_len);
    cfg.vocab_min_freq = obj.value("vocab_min_freq", cfg.vocab_min_freq);
    cfg.threshold = obj.value("threshold", cfg.threshold);
    cfg.use_prototypes = obj.value("use_prototypes", cfg.use_prototypes);
    cfg.use_in_context_attn =
        obj.value("use_in_context_attn", cfg.use_in_context_attn);
    cfg.use_event_type_attn =
        obj.value("use_event_type_attn", cfg.use_event_type_attn);
    cfg.use_multiway = obj.value("use_multiway", cfg.use_multiway);
    cfg.use_entity_self_attn =
        obj.value("use_entity_self_attn", cfg.use_entity_self_attn);
    cfg.use_role_self_attn =
        obj.value("use_role_self_attn", cfg.use_role_self_attn);
    cfg.use_gold_entities =
        obj.value("use_gold_entities", cfg.use_gold_entities);
    cfg.use_gold_triggers =
        obj.value("use_gold_triggers", cfg.use_gold_triggers);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config: malformed field: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

TrainConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

void save_config(const std::string& path, const TrainConfig& cfg) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write config file: " + path);
  out << config_to_json(cfg) << "\n";
  if (!out) throw RuntimeFailure("write failed: " + path);
}

std::string config_fingerprint(const TrainConfig& cfg) {
  return hex64(fnv1a(config_to_json(cfg)));
}

// ---------------------------------------------------------------------------
// Model assembly
// ---------------------------------------------------------------------------

Model init_model(const TrainConfig& cfg, vocab::Vocab vocab,
                 ontology::Ontology ont,
                 std::vector<std::string> entity_types) {
  validate_config(cfg);
  if (entity_types.empty()) {
    throw ValidationError("model: entity type inventory is empty");
  }
  Model model;
  model.config = cfg;
  model.vocab = std::move(vocab);
  model.ontology = std::move(ont);
  model.entity_types = std::move(entity_types);
  std::sort(model.entity_types.begin(), model.entity_types.end());

  const encoder::EncoderConfig ec = encoder_config(cfg, model.vocab.size());
  const tagger::BioLabels labels(model.entity_types);

  // One independent rng stream per store so adding parameters to one stage
  // never shifts another stage's initialization.
  Rng root(cfg.seed);
  Rng tag_rng = root.fork("tagger");
  encoder::init_params(model.tagger, "enc", ec, tag_rng);
  tagger::init_params(model.tagger, "crf", cfg.hidden, labels.size(), tag_rng);
  Rng trig_rng = root.fork("trigger");
  encoder::init_params(model.trigger, "enc", ec, trig_rng);
  trigger::init_params(model.trigger, "head", cfg.hidden, trig_rng);
  Rng arg_rng = root.fork("argument");
  encoder::init_params(model.argument, "enc", ec, arg_rng);
  argument::init_params(model.argument, "head", cfg.hidden, arg_rng);

  snap_store_f32(model.tagger);
  snap_store_f32(model.trigger);
  snap_store_f32(model.argument);
  return model;
}

std::vector<std::string> derive_entity_types(
    const std::vector<SentenceExample>& sentences) {
  std::set<std::string> types;
  for (const auto& s : sentences) {
    for (const auto& e : s.entities) types.insert(e.type);
  }
  return {types.begin(), types.end()};
}

std::vector<SentenceExample> filter_events(
    const std::vector<SentenceExample>& sentences,
    const std::vector<std::string>& keep_types) {
  const std::set<std::string> keep(keep_types.begin(), keep_types.end());
  std::vector<SentenceExample> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    SentenceExample copy = s;
    copy.events.clear();
    for (const auto& ev : s.events) {
      if (keep.count(ev.type) != 0) copy.events.push_back(ev);
    }
    out.push_back(std::move(copy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Forward passes
// ---------------------------------------------------------------------------

TriggerForward trigger_forward(const Model& model,
                               const SentenceExample& sentence,
                               const ontology::EventTypeDef& type_def,
                               Rng* dropout_rng) {
  const TrainConfig& cfg = model.config;
  TriggerForward fw;
  fw.query = ontology::build_trigger_query(sentence.tokens, type_def,
                                           cfg.use_prototypes);
  const encoder::EncoderConfig ec = encoder_config(cfg, model.vocab.size());
  encoder::EncoderOutput enc = encoder::encode(
      model.vocab.encode(fw.query.tokens), fw.query.segments, model.trigger,
      "enc", ec, encode_opts(model, dropout_rng));

  const std::size_t n = fw.query.sentence.length();
  fw.tokens = ad::slice_rows(enc.hidden, fw.query.sentence.begin,
                             fw.query.sentence.end);
  fw.in_context =
      cfg.use_in_context_attn
          ? trigger::in_context_attention(enc.hidden, enc.attention_avg,
                                          fw.query.sentence)
          : Tensor::zeros({n, cfg.hidden});
  fw.type_attn = cfg.use_event_type_attn
                     ? trigger::event_type_attention(
                           enc.hidden, fw.query.sentence, fw.query.query)
                     : Tensor::zeros({n, cfg.hidden});
  std::vector<std::string> pos_fallback;
  fw.pos = trigger::pos_features(sentence_pos(sentence, pos_fallback));
  fw.logits = trigger::classify_tokens(
      maybe_dropout(fw.tokens, model, dropout_rng),
      maybe_dropout(fw.in_context, model, dropout_rng),
      maybe_dropout(fw.type_attn, model, dropout_rng), fw.pos, model.trigger,
      "head");
  return fw;
}

ArgumentForward argument_forward(
    const Model& model, const SentenceExample& sentence,
    const std::vector<corpus::EntityMention>& entities,
    const std::string& event_type, corpus::Span trigger_span,
    Rng* dropout_rng) {
  const TrainConfig& cfg = model.config;
  const ontology::EventTypeDef* type_def =
      model.ontology.find_type(event_type);
  if (type_def == nullptr) {
    throw ValidationError("argument forward: unknown event type '" +
                          event_type + "'");
  }
  if (entities.empty()) {
    throw ValidationError("argument forward: empty entity table");
  }

  ArgumentForward fw;
  fw.roles = type_def->roles;
  const ontology::QueryTokens q =
      ontology::build_argument_query(sentence.tokens, *type_def);
  const encoder::EncoderConfig ec = encoder_config(cfg, model.vocab.size());
  encoder::EncoderOutput enc =
      encoder::encode(model.vocab.encode(q.tokens), q.segments,
                      model.argument, "enc", ec,
                      encode_opts(model, dropout_rng));

  // All spans below are sentence coordinates shifted into query coordinates.
  const std::size_t base = q.sentence.begin;
  const std::size_t n = sentence.tokens.size();
  if (trigger_span.start >= trigger_span.end || trigger_span.end > n) {
    throw ValidationError("argument forward: trigger span out of bounds");
  }
  Tensor trig_rep = argument::pool_span(enc.hidden, base + trigger_span.start,
                                        base + trigger_span.end);
  std::vector<Tensor> entity_rows;
  entity_rows.reserve(entities.size());
  for (const auto& e : entities) {
    if (e.span.start >= e.span.end || e.span.end > n) {
      throw ValidationError("argument forward: entity '" + e.id +
                            "' span out of bounds");
    }
    entity_rows.push_back(argument::pool_span(enc.hidden, base + e.span.start,
                                              base + e.span.end));
  }
  Tensor pooled = ad::stack_rows(entity_rows);
  Tensor fused = argument::trigger_aware_entities(pooled, trig_rep,
                                                  model.argument, "head");
  fw.entities = maybe_dropout(fused, model, dropout_rng);

  std::vector<Tensor> role_rows;
  role_rows.reserve(q.role_slots.size());
  for (const auto& slot : q.role_slots) {
    role_rows.push_back(argument::pool_span(enc.hidden, slot.begin, slot.end));
  }
  fw.role_reps = maybe_dropout(ad::stack_rows(role_rows), model, dropout_rng);
  fw.other_rep = ad::row(enc.hidden, q.other_slot);

  const std::size_t m = entities.size();
  const std::size_t d = cfg.hidden;
  const std::size_t num_roles = fw.roles.size();
  if (cfg.use_multiway) {
    fw.flows = argument::attention_flows(fw.entities, fw.role_reps);
    if (!cfg.use_entity_self_attn) {
      fw.flows.entity_self = Tensor::zeros({m, d});
    }
    if (!cfg.use_role_self_attn) {
      fw.flows.role_self = Tensor::zeros({num_roles, d});
    }
  } else {
    // The whole multiway block off: all four flows contribute nothing.
    fw.flows.entity_to_role = Tensor::zeros({m, d});
    fw.flows.role_to_entity = Tensor::zeros({num_roles, d});
    fw.flows.entity_self = Tensor::zeros({m, d});
    fw.flows.role_self = Tensor::zeros({num_roles, d});
  }
  fw.logits = argument::classify_arguments(fw.entities, fw.role_reps,
                                           fw.other_rep, fw.flows,
                                           model.argument, "head");
  return fw;
}

ad::Tensor tagger_emissions(const Model& model,
                            const SentenceExample& sentence,
                            Rng* dropout_rng) {
  const ontology::QueryTokens q =
      ontology::build_plain_sequence(sentence.tokens);
  const encoder::EncoderConfig ec =
      encoder_config(model.config, model.vocab.size());
  encoder::EncoderOutput enc =
      encoder::encode(model.vocab.encode(q.tokens), q.segments, model.tagger,
                      "enc", ec, encode_opts(model, dropout_rng));
  Tensor words =
      ad::slice_rows(enc.hidden, q.sentence.begin, q.sentence.end);
  return tagger::emission_scores(maybe_dropout(words, model, dropout_rng),
                                 model.tagger, "crf");
}

std::vector<corpus::EntityMention> tag_sentence(
    const Model& model, const SentenceExample& sentence) {
  const tagger::BioLabels labels(model.entity_types);
  Tensor emissions = tagger_emissions(model, sentence, nullptr);
  const tagger::CrfMask mask = tagger::bio_mask(labels);
  const std::vector<std::size_t> path = tagger::crf_viterbi(
      emissions.values(), labels.size(),
      model.tagger.get("crf.trans").values(),
      model.tagger.get("crf.start").values(),
      model.tagger.get("crf.end").values(), &mask);
  return tagger::extract_entities(labels, path);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

// Gold bit per token for one (sentence, type) trigger query.
std::vector<int> trigger_gold(const SentenceExample& s,
                              const std::string& type) {
  std::vector<int> gold(s.tokens.size(), 0);
  for (const auto& ev : s.events) {
    if (ev.type != type) continue;
    for (std::size_t i = ev.trigger.start; i < ev.trigger.end; ++i) {
      gold[i] = 1;
    }
  }
  return gold;
}

// Gold grid for one event over an entity table; matching is by span so
// tagger-proposed entities line up with gold argument annotations.
std::vector<std::vector<int>> argument_gold(
    const SentenceExample& s, const corpus::EventMention& event,
    const std::vector<corpus::EntityMention>& entities,
    const std::vector<std::string>& roles) {
  std::vector<std::vector<int>> grid(roles.size() + 1,
                                     std::vector<int>(entities.size(), 0));
  for (std::size_t i = 0; i < entities.size(); ++i) {
    bool any_role = false;
    for (const auto& arg : event.arguments) {
      const corpus::EntityMention* gold_ent = s.find_entity(arg.entity_id);
      if (gold_ent == nullptr || !(gold_ent->span == entities[i].span)) {
        continue;
      }
      for (std::size_t j = 0; j < roles.size(); ++j) {
        if (roles[j] == arg.role) {
          grid[j][i] = 1;
          any_role = true;
        }
      }
    }
    if (!any_role) grid[roles.size()][i] = 1;
  }
  return grid;
}

// Entity table used by the argument stage: gold mentions, or the frozen
// tagger's output when gold conditioning is off.
std::vector<corpus::EntityMention> argument_entities(
    const Model& model, const SentenceExample& s) {
  if (model.config.use_gold_entities) return s.entities;
  return tag_sentence(model, s);
}

// Indices trained on this stage: every sentence for tagger/argument, and
// for the trigger stage all event sentences plus a fixed random sample of
// the no-event ones, drawn once before the epochs.
std::vector<std::size_t> stage_examples(const std::string& stage,
                                        const std::vector<SentenceExample>& data,
                                        const TrainConfig& cfg) {
  std::vector<std::size_t> keep;
  if (stage != "trigger") {
    keep.resize(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) keep[i] = i;
    return keep;
  }
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data[i].events.empty()) {
      negatives.push_back(i);
    } else {
      keep.push_back(i);
    }
  }
  Rng rng = Rng(cfg.seed).fork("negative_sample");
  rng.shuffle(negatives);
  const std::size_t kept = static_cast<std::size_t>(
      std::llround(cfg.negative_sample_rate *
                   static_cast<double>(negatives.size())));
  negatives.resize(std::min(kept, negatives.size()));
  keep.insert(keep.end(), negatives.begin(), negatives.end());
  std::sort(keep.begin(), keep.end());
  return keep;
}

Tensor tagger_sentence_loss(const Model& model, const SentenceExample& s,
                            Rng* dropout_rng) {
  const tagger::BioLabels labels(model.entity_types);
  Tensor emissions = tagger_emissions(model, s, dropout_rng);
  const std::vector<std::size_t> gold =
      tagger::bio_encode(labels, s.tokens.size(), s.entities);
  Tensor nll = tagger::crf_nll(emissions, model.tagger.get("crf.trans"),
                               model.tagger.get("crf.start"),
                               model.tagger.get("crf.end"), gold);
  // Per-token normalization keeps the step size independent of length.
  return ad::scale(nll, 1.0 / static_cast<double>(s.tokens.size()));
}

Tensor trigger_sentence_loss(const Model& model, const SentenceExample& s,
                             Rng* dropout_rng) {
  Tensor total;
  for (const auto& type_def : model.ontology.types) {
    TriggerForward fw = trigger_forward(model, s, type_def, dropout_rng);
    Tensor ce = trigger::token_loss(fw.logits, trigger_gold(s, type_def.name));
    total = total.defined() ? ad::add(total, ce) : ce;
  }
  const double pairs = static_cast<double>(model.ontology.types.size()) *
                       static_cast<double>(s.tokens.size());
  return ad::scale(total, 1.0 / pairs);
}

Tensor argument_sentence_loss(const Model& model, const SentenceExample& s,
                              Rng* dropout_rng) {
  if (s.events.empty()) return {};
  const std::vector<corpus::EntityMention> entities =
      argument_entities(model, s);
  if (entities.empty()) return {};
  Tensor total;
  std::size_t counted = 0;
  for (const auto& ev : s.events) {
    ArgumentForward fw = argument_forward(model, s, entities, ev.type,
                                          ev.trigger, dropout_rng);
    Tensor loss = argument::argument_loss(
        fw.logits, argument_gold(s, ev, entities, fw.roles));
    total = total.defined() ? ad::add(total, loss) : loss;
    ++counted;
  }
  if (counted == 0) return {};
  return ad::scale(total, 1.0 / static_cast<double>(counted));
}

}  // namespace

ad::Tensor stage_loss(const Model& model, const std::string& stage,
                      const SentenceExample& sentence, Rng* dropout_rng) {
  if (stage == "tagger") {
    return tagger_sentence_loss(model, sentence, dropout_rng);
  }
  if (stage == "trigger") {
    return trigger_sentence_loss(model, sentence, dropout_rng);
  }
  if (stage == "argument") {
    return argument_sentence_loss(model, sentence, dropout_rng);
  }
  throw ValidationError("unknown training stage '" + stage + "'");
}

StageStats train_stage(Model& model, const std::string& stage,
                       const std::vector<SentenceExample>& train) {
  if (stage != "tagger" && stage != "trigger" && stage != "argument") {
    throw ValidationError("unknown training stage '" + stage + "'");
  }
  if (train.empty()) {
    throw ValidationError("training corpus is empty");
  }
  const TrainConfig& cfg = model.config;
  if (stage == "trigger" && model.ontology.types.empty()) {
    throw ValidationError("trigger stage: ontology has no event types");
  }

  ad::ParameterStore& store = stage == "tagger" ? model.tagger
                              : stage == "trigger" ? model.trigger
                                                   : model.argument;
  if (stage == "tagger") {
    bool any = false;
    for (const auto& s : train) any = any || !s.entities.empty();
    if (!any) {
      throw ValidationError("tagger stage: no entity mentions in corpus");
    }
  }

  StageStats stats;
  stats.stage = stage;
  std::vector<std::size_t> examples = stage_examples(stage, train, cfg);
  Rng rng = Rng(cfg.seed).fork("train." + stage);
  ad::Adam adam(cfg.learning_rate);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(examples);
    double epoch_loss = 0.0;
    std::size_t contributing = 0;
    std::size_t cursor = 0;
    while (cursor < examples.size()) {
      const std::size_t batch_end =
          std::min(cursor + cfg.batch_size, examples.size());
      // Per-sentence graphs are built, back-propagated, and torn down one at
      // a time; leaf gradients accumulate over the batch, then one step.
      store.zero_grads();
      const double inv = 1.0 / static_cast<double>(batch_end - cursor);
      bool any = false;
      for (std::size_t b = cursor; b < batch_end; ++b) {
        const SentenceExample& s = train[examples[b]];
        Tensor loss = stage_loss(model, stage, s, &rng);
        if (!loss.defined()) continue;
        const double value = loss.value();
        if (!std::isfinite(value)) {
          throw RuntimeFailure(stage + " stage: non-finite loss at epoch " +
                               std::to_string(epoch) + " on sentence '" +
                               s.id + "'");
        }
        epoch_loss += value;
        ++contributing;
        any = true;
        ad::backward(ad::scale(loss, inv));
      }
      if (any) adam.step(store);
      cursor = batch_end;
    }
    stats.epoch_mean_loss.push_back(
        contributing == 0 ? 0.0
                          : epoch_loss / static_cast<double>(contributing));
    std::ostringstream msg;
    msg << stage << " epoch " << epoch << " mean loss "
        << stats.epoch_mean_loss.back();
    log::info(msg.str());
  }
  snap_store_f32(store);
  model.stage = stage;
  return stats;
}

std::vector<StageStats> train_all(Model& model,
                                  const std::vector<SentenceExample>& train) {
  std::vector<StageStats> all;
  if (!model.config.use_gold_entities) {
    all.push_back(train_stage(model, "tagger", train));
  }
  all.push_back(train_stage(model, "trigger", train));
  all.push_back(train_stage(model, "argument", train));
  return all;
}

// ---------------------------------------------------------------------------
// Prediction
// ---------------------------------------------------------------------------

std::vector<eval::SentencePrediction> predict_corpus(
    const Model& model, const std::vector<SentenceExample>& data,
    const std::vector<std::string>* restrict_types) {
  const TrainConfig& cfg = model.config;
  std::vector<const ontology::EventTypeDef*> query_types;
  if (restrict_types != nullptr) {
    for (const auto& name : *restrict_types) {
      const ontology::EventTypeDef* def = model.ontology.find_type(name);
      if (def == nullptr) {
        throw ValidationError("predict: unknown event type '" + name + "'");
      }
      query_types.push_back(def);
    }
  } else {
    for (const auto& def : model.ontology.types) query_types.push_back(&def);
  }

  std::vector<eval::SentencePrediction> out;
  out.reserve(data.size());
  for (const auto& s : data) {
    eval::SentencePrediction pred;
    pred.id = s.id;
    pred.entities = cfg.use_gold_entities ? s.entities : tag_sentence(model, s);

    // Trigger candidates: gold conditioning or per-type query decoding.
    struct Candidate {
      std::string type;
      corpus::Span span;
      double prob;
    };
    std::vector<Candidate> candidates;
    if (cfg.use_gold_triggers) {
      for (const auto& ev : s.events) {
        if (restrict_types != nullptr) {
          bool keep = false;
          for (const auto& name : *restrict_types) keep = keep || name == ev.type;
          if (!keep) continue;
        }
        candidates.push_back({ev.type, ev.trigger, 1.0});
      }
    } else {
      for (const ontology::EventTypeDef* def : query_types) {
        TriggerForward fw = trigger_forward(model, s, *def, nullptr);
        const std::vector<trigger::TokenSpan> spans = trigger::decode_spans(
            trigger::positive_probs(fw.logits), cfg.threshold);
        for (const auto& sp : spans) {
          candidates.push_back(
              {def->name, corpus::Span{sp.start, sp.end}, sp.prob});
        }
      }
    }

    for (const auto& c : candidates) {
      eval::TriggerPred tp;
      tp.type = c.type;
      tp.span = c.span;
      tp.prob = c.prob;
      if (!pred.entities.empty()) {
        ArgumentForward fw = argument_forward(model, s, pred.entities, c.type,
                                              c.span, nullptr);
        const auto probs = argument::grid_probs(fw.logits);
        const auto roles = argument::decode_roles(probs, cfg.threshold);
        for (std::size_t i = 0; i < roles.size(); ++i) {
          for (std::size_t j : roles[i]) {
            eval::ArgumentPred ap;
            ap.entity_id = pred.entities[i].id;
            ap.role = fw.roles[j];
            ap.prob = probs[j][i];
            tp.arguments.push_back(std::move(ap));
          }
        }
      }
      pred.triggers.push_back(std::move(tp));
    }
    out.push_back(std::move(pred));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  write_u32(out, static_cast<std::uint32_t>(v));
  write_u32(out, static_cast<std::uint32_t>(v >> 32));
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw RuntimeFailure("checkpoint truncated: " + path);
  }
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t read_u64(std::istream& in, const std::string& path) {
  const std::uint64_t lo = read_u32(in, path);
  const std::uint64_t hi = read_u32(in, path);
  return lo | (hi << 32);
}

std::string read_bytes(std::istream& in, std::size_t n,
                       const std::string& path) {
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw RuntimeFailure("checkpoint truncated: " + path);
  }
  return s;
}

void write_store(std::ostream& out, const ad::ParameterStore& store,
                 const std::string& prefix) {
  for (const auto& [name, tensor] : store) {
    const std::string full = prefix + "/" + name;
    write_u32(out, static_cast<std::uint32_t>(full.size()));
    out.write(full.data(), static_cast<std::streamsize>(full.size()));
    write_u32(out, static_cast<std::uint32_t>(tensor.shape().size()));
    for (std::size_t dim : tensor.shape()) write_u64(out, dim);
    for (double v : tensor.values()) {
      write_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint: " + path);

  ordered_json header;
  header["version"] = kCheckpointVersion;
  header["stage"] = model.stage;
  header["config"] = ordered_json::parse(config_to_json(model.config));
  header["vocab"] = model.vocab.tokens();
  header["ontology_fingerprint"] = hex64(ontology::fingerprint(model.ontology));
  header["entity_types"] = model.entity_types;
  header["tensors"] =
      model.tagger.size() + model.trigger.size() + model.argument.size();
  const std::string header_text = header.dump();

  out.write(kMagic, 4);
  write_u32(out, kCheckpointVersion);
  write_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out.write(header_text.data(),
            static_cast<std::streamsize>(header_text.size()));
  write_store(out, model.tagger, "tagger");
  write_store(out, model.trigger, "trigger");
  write_store(out, model.argument, "argument");
  if (!out) throw RuntimeFailure("write failed: " + path);
}

Model load_checkpoint(const std::string& path, ontology::Ontology ont,
                      bool force) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path);

  const std::string magic = read_bytes(in, 4, path);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw ValidationError("not a checkpoint file: " + path);
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kCheckpointVersion) {
    throw ValidationError("unsupported checkpoint version " +
                          std::to_string(version) + " in " + path);
  }
  const std::uint32_t header_len = read_u32(in, path);
  const std::string header_text = read_bytes(in, header_len, path);
  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw RuntimeFailure("checkpoint header corrupted: " + path + ": " +
                         e.what());
  }

  Model model;
  try {
    model.config = config_from_json(header.at("config").dump());
    model.stage = header.at("stage").get<std::string>();
    model.vocab = vocab::Vocab::from_tokens(
        header.at("vocab").get<std::vector<std::string>>());
    model.entity_types =
        header.at("entity_types").get<std::vector<std::string>>();
    const std::string stored =
        header.at("ontology_fingerprint").get<std::string>();
    const std::string actual = hex64(ontology::fingerprint(ont));
    if (stored != actual) {
      if (!force) {
        throw ValidationError(
            "checkpoint was trained on a different ontology (fingerprint " +
            stored + ", given " + actual + "); pass force to override");
      }
      log::warn("ontology fingerprint mismatch overridden for " + path);
    }
  } catch (const json::exception& e) {
    throw RuntimeFailure("checkpoint header corrupted: " + path + ": " +
                         e.what());
  }
  model.ontology = std::move(ont);

  const std::size_t expected = header.at("tensors").get<std::size_t>();
  for (std::size_t i = 0; i < expected; ++i) {
    const std::uint32_t name_len = read_u32(in, path);
    const std::string full = read_bytes(in, name_len, path);
    const std::size_t slash = full.find('/');
    if (slash == std::string::npos) {
      throw RuntimeFailure("checkpoint corrupted: bad tensor name '" + full +
                           "' in " + path);
    }
    const std::string store_name = full.substr(0, slash);
    const std::string param_name = full.substr(slash + 1);
    ad::ParameterStore* store =
        store_name == "tagger"    ? &model.tagger
        : store_name == "trigger" ? &model.trigger
        : store_name == "argument" ? &model.argument
                                   : nullptr;
    if (store == nullptr) {
      throw RuntimeFailure("checkpoint corrupted: unknown store '" +
                           store_name + "' in " + path);
    }
    if (store->contains(param_name)) {
      throw RuntimeFailure("checkpoint corrupted: duplicate tensor '" + full +
                           "' in " + path);
    }
    const std::uint32_t rank = read_u32(in, path);
    ad::Shape shape(rank);
    std::size_t count = 1;
    for (std::uint32_t r = 0; r < rank; ++r) {
      shape[r] = static_cast<std::size_t>(read_u64(in, path));
      count *= shape[r];
    }
    std::vector<double> values(count);
    for (std::size_t v = 0; v < count; ++v) {
      values[v] = static_cast<double>(
          std::bit_cast<float>(read_u32(in, path)));
    }
    store->put(param_name, Tensor::leaf(std::move(shape), std::move(values)));
  }
  // Trailing garbage is as suspicious as truncation.
  char extra;
  if (in.read(&extra, 1)) {
    throw RuntimeFailure("checkpoint corrupted: trailing data in " + path);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

// Sentence union for joint training: exact duplicates collapse (so a corpus
// joined with itself trains like the single corpus), conflicting reuses of
// an id are disambiguated with a source prefix.
std::vector<SentenceExample> union_corpora(
    const std::vector<SentenceExample>& a,
    const std::vector<SentenceExample>& b) {
  std::vector<SentenceExample> out = a;
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < out.size(); ++i) by_id[out[i].id] = i;
  for (const auto& s : b) {
    auto it = by_id.find(s.id);
    if (it != by_id.end()) {
      if (out[it->second] == s) continue;
      SentenceExample renamed = s;
      renamed.id = "extra:" + s.id;
      if (by_id.count(renamed.id) != 0) {
        throw ValidationError("joint corpus: id collision on '" + renamed.id +
                              "'");
      }
      by_id[renamed.id] = out.size();
      out.push_back(std::move(renamed));
    } else {
      by_id[s.id] = out.size();
      out.push_back(s);
    }
  }
  return out;
}

std::vector<std::string> entity_inventory(
    const std::vector<const std::vector<SentenceExample>*>& corpora) {
  std::set<std::string> types;
  for (const auto* c : corpora) {
    for (const auto& t : derive_entity_types(*c)) types.insert(t);
  }
  if (types.empty()) types.insert("entity");
  return {types.begin(), types.end()};
}

void fill_metadata(eval::ScoreReport& report, const ExperimentSpec& spec,
                   const TrainConfig& cfg, const ontology::Ontology& ont) {
  report.metadata["mode"] = spec.mode;
  report.metadata["seed"] = std::to_string(cfg.seed);
  report.metadata["config"] = config_fingerprint(cfg);
  report.metadata["ontology"] = hex64(ontology::fingerprint(ont));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec,
                                const TrainConfig& cfg) {
  validate_config(cfg);
  if (spec.train.sentences.empty()) {
    throw ValidationError("experiment: training corpus is empty");
  }

  ExperimentResult result;

  if (spec.mode == "supervised") {
    ontology::Ontology ont = spec.train.ontology;
    if (cfg.use_prototypes) {
      ontology::select_all_prototypes(spec.train.sentences, ont,
                                      cfg.prototypes_k);
    }
    vocab::Vocab vocab = vocab::Vocab::build({&spec.train.sentences}, {&ont},
                                             cfg.vocab_min_freq);
    result.model = init_model(cfg, std::move(vocab), ont,
                              entity_inventory({&spec.train.sentences}));
    train_all(result.model, spec.train.sentences);
    const auto& eval_set =
        spec.test.sentences.empty() ? spec.train.sentences : spec.test.sentences;
    result.predictions = predict_corpus(result.model, eval_set);
    result.report = eval::score(eval_set, result.predictions);
  } else if (spec.mode == "zero-shot") {
    if (spec.seen_types.empty()) {
      throw ValidationError("zero-shot: seen type list is empty");
    }
    std::vector<std::string> unseen;
    std::set<std::string> seen(spec.seen_types.begin(), spec.seen_types.end());
    for (const auto& name : spec.seen_types) {
      if (spec.train.ontology.find_type(name) == nullptr) {
        throw ValidationError("zero-shot: seen type '" + name +
                              "' is not in the ontology");
      }
    }
    for (const auto& def : spec.train.ontology.types) {
      if (seen.count(def.name) == 0) unseen.push_back(def.name);
    }
    if (unseen.empty()) {
      throw ValidationError("zero-shot: no unseen types left to evaluate");
    }

    // Type queries are names only (no seed triggers), and all unseen-type
    // annotations disappear from the training corpus.
    TrainConfig zcfg = cfg;
    zcfg.use_prototypes = false;
    ontology::Ontology seen_ont;
    seen_ont.name = spec.train.ontology.name;
    for (const auto& def : spec.train.ontology.types) {
      if (seen.count(def.name) != 0) seen_ont.types.push_back(def);
    }
    // Sentences whose only events were of unseen types are dropped rather
    // than kept as negatives: their triggers are real, just unlabeled here,
    // and training on them as non-triggers would punish the very evidence
    // the unseen-type queries need at evaluation time.  Sentences with no
    // events at all stay as genuine negatives.
    std::vector<SentenceExample> train_set;
    train_set.reserve(spec.train.sentences.size());
    for (const auto& s : spec.train.sentences) {
      SentenceExample copy = s;
      copy.events.clear();
      for (const auto& ev : s.events) {
        if (seen.count(ev.type) != 0) copy.events.push_back(ev);
      }
      if (!copy.events.empty() || s.events.empty()) {
        train_set.push_back(std::move(copy));
      }
    }
    vocab::Vocab vocab = vocab::Vocab::build(
        {&train_set}, {&spec.train.ontology}, zcfg.vocab_min_freq);
    result.model = init_model(zcfg, std::move(vocab), seen_ont,
                              entity_inventory({&train_set}));
    train_all(result.model, train_set);

    // Swap in the full ontology so unseen-type queries can be issued.
    result.model.ontology = spec.train.ontology;
    for (auto& def : result.model.ontology.types) def.prototypes.clear();
    const auto& eval_input =
        spec.test.sentences.empty() ? spec.train.sentences : spec.test.sentences;
    const std::vector<SentenceExample> eval_gold =
        filter_events(eval_input, unseen);
    result.predictions = predict_corpus(result.model, eval_input, &unseen);
    result.report = eval::score(eval_gold, result.predictions);
  } else if (spec.mode == "direct-transfer") {
    if (spec.test.sentences.empty()) {
      throw ValidationError("direct-transfer: target corpus is empty");
    }
    ontology::Ontology src_ont = spec.train.ontology;
    if (cfg.use_prototypes) {
      ontology::select_all_prototypes(spec.train.sentences, src_ont,
                                      cfg.prototypes_k);
    }
    // Target types that share a source name inherit its seed triggers; the
    // rest are queried by name alone.
    ontology::Ontology tgt_ont = spec.test.ontology;
    for (auto& def : tgt_ont.types) {
      def.prototypes.clear();
      const ontology::EventTypeDef* src = src_ont.find_type(def.name);
      if (src != nullptr) def.prototypes = src->prototypes;
    }
    vocab::Vocab vocab =
        vocab::Vocab::build({&spec.train.sentences}, {&src_ont, &tgt_ont},
                            cfg.vocab_min_freq);
    result.model = init_model(
        cfg, std::move(vocab), src_ont,
        entity_inventory({&spec.train.sentences, &spec.test.sentences}));
    train_all(result.model, spec.train.sentences);
    result.model.ontology = tgt_ont;
    result.predictions = predict_corpus(result.model, spec.test.sentences);
    result.report = eval::score(spec.test.sentences, result.predictions);
  } else if (spec.mode == "joint-enhancement") {
    if (spec.extra.sentences.empty()) {
      throw ValidationError("joint-enhancement: second corpus is empty");
    }
    ontology::Ontology merged =
        ontology::merge_ontologies(spec.train.ontology, spec.extra.ontology);
    const std::vector<SentenceExample> unioned =
        union_corpora(spec.train.sentences, spec.extra.sentences);
    if (cfg.use_prototypes) {
      ontology::select_all_prototypes(unioned, merged, cfg.prototypes_k);
    }
    vocab::Vocab vocab =
        vocab::Vocab::build({&unioned}, {&merged}, cfg.vocab_min_freq);
    result.model =
        init_model(cfg, std::move(vocab), merged, entity_inventory({&unioned}));
    if (spec.sequential) {
      train_all(result.model, spec.extra.sentences);
      train_all(result.model, spec.train.sentences);
    } else {
      train_all(result.model, unioned);
    }
    const auto& eval_set =
        spec.test.sentences.empty() ? unioned : spec.test.sentences;
    result.predictions = predict_corpus(result.model, eval_set);
    result.report = eval::score(eval_set, result.predictions);
  } else {
    throw ValidationError("unknown experiment mode '" + spec.mode + "'");
  }

  fill_metadata(result.report, spec, cfg, result.model.ontology);
  return result;
}

}  // namespace eqex::pipeline
