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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "eqex/corpus.hpp"
#include "eqex/error.hpp"
#include "eqex/fixture.hpp"
#include "eqex/pipeline.hpp"

namespace {

using namespace eqex::pipeline;
using eqex::RuntimeFailure;
using eqex::ValidationError;
using eqex::ad::Tensor;
using eqex::corpus::SentenceExample;

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.seed = 21;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  cfg.dropout = 0.0;
  cfg.hidden = 16;
  cfg.layers = 1;
  cfg.heads = 2;
  cfg.attn_avg_layers = 1;
  cfg.use_gold_entities = true;
  return cfg;
}

Model tiny_model(const TrainConfig& cfg) {
  const eqex::fixture::Fixture fix = eqex::fixture::make_overfit_fixture(7);
  const eqex::vocab::Vocab vocab =
      eqex::vocab::Vocab::build({&fix.sentences}, {&fix.ontology});
  return init_model(cfg, vocab, fix.ontology, fix.entity_types);
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool all_zero(const Tensor& t) {
  for (double v : t.values()) {
    if (v != 0.0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("config round-trips through JSON and rejects unknown keys") {
  TrainConfig cfg = tiny_config();
  cfg.learning_rate = 2.5e-3;
  cfg.use_prototypes = false;
  cfg.threshold = 0.4;

  const TrainConfig back = config_from_json(config_to_json(cfg));
  CHECK(back.seed == cfg.seed);
  CHECK(back.learning_rate == cfg.learning_rate);
  CHECK(back.use_prototypes == cfg.use_prototypes);
  CHECK(back.threshold == cfg.threshold);
  CHECK(back.hidden == cfg.hidden);
  CHECK(config_fingerprint(back) == config_fingerprint(cfg));

  CHECK_THROWS_AS(config_from_json(R"({"hiden": 32})"), ValidationError);
  CHECK_THROWS_AS(config_from_json("not json"), ValidationError);

  const std::string path = "scratch_config.json";
  save_config(path, cfg);
  const TrainConfig loaded = load_config(path);
  CHECK(config_fingerprint(loaded) == config_fingerprint(cfg));
  std::remove(path.c_str());

  TrainConfig changed = cfg;
  changed.epochs += 1;
  CHECK(config_fingerprint(changed) != config_fingerprint(cfg));
}

TEST_CASE("config validation rejects out-of-range values") {
  TrainConfig cfg = tiny_config();
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  cfg = tiny_config();
  cfg.dropout = 1.0;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  cfg = tiny_config();
  cfg.threshold = 1.0;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  cfg = tiny_config();
  cfg.prototypes_k = eqex::ontology::kMaxPrototypes + 1;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
  cfg = tiny_config();
  cfg.batch_size = 0;
  CHECK_THROWS_AS(validate_config(cfg), ValidationError);
}

TEST_CASE("filter_events strips events but keeps sentences") {
  const eqex::fixture::Fixture fix = eqex::fixture::make_zeroshot_fixture(13);
  const auto seen = eqex::fixture::zeroshot_seen_types();
  const auto filtered = filter_events(fix.sentences, seen);
  REQUIRE(filtered.size() == fix.sentences.size());
  std::size_t kept = 0, dropped = 0;
  for (std::size_t i = 0; i < filtered.size(); ++i) {
    CHECK(filtered[i].tokens == fix.sentences[i].tokens);
    CHECK(filtered[i].entities == fix.sentences[i].entities);
    for (const auto& ev : filtered[i].events) {
      const bool is_seen =
          std::find(seen.begin(), seen.end(), ev.type) != seen.end();
      CHECK(is_seen);
    }
    kept += filtered[i].events.size();
    dropped += fix.sentences[i].events.size() - filtered[i].events.size();
  }
  CHECK(kept > 0);
  CHECK(dropped > 0);
}

TEST_CASE("derive_entity_types is sorted and unique") {
  SentenceExample a;
  a.id = "a";
  a.tokens = {"x"};
  a.pos = {"NOUN"};
  a.entities = {{"e0", {0, 1}, "per"}, {"e1", {0, 1}, "loc"}};
  SentenceExample b;
  b.id = "b";
  b.tokens = {"y"};
  b.pos = {"NOUN"};
  b.entities = {{"e0", {0, 1}, "per"}};
  const auto types = derive_entity_types({a, b});
  CHECK(types == std::vector<std::string>{"loc", "per"});
}

TEST_CASE("same seed yields byte-identical fresh models") {
  const TrainConfig cfg = tiny_config();
  Model m1 = tiny_model(cfg);
  Model m2 = tiny_model(cfg);
  save_checkpoint("scratch_m1.ckpt", m1);
  save_checkpoint("scratch_m2.ckpt", m2);
  CHECK(read_bytes("scratch_m1.ckpt") == read_bytes("scratch_m2.ckpt"));

  TrainConfig other = cfg;
  other.seed = 22;
  Model m3 = tiny_model(other);
  save_checkpoint("scratch_m3.ckpt", m3);
  CHECK(read_bytes("scratch_m1.ckpt") != read_bytes("scratch_m3.ckpt"));
  std::remove("scratch_m1.ckpt");
  std::remove("scratch_m2.ckpt");
  std::remove("scratch_m3.ckpt");
}

TEST_CASE("trigger feature flags zero exactly their block") {
  const eqex::fixture::Fixture fix = eqex::fixture::make_overfit_fixture(7);
  const SentenceExample& sent = fix.sentences.front();
  const auto& type_def = fix.ontology.types.front();

  TrainConfig cfg = tiny_config();
  Model model = tiny_model(cfg);
  const TriggerForward full = trigger_forward(model, sent, type_def, nullptr);
  const std::size_t n = sent.tokens.size();
  CHECK(full.logits.shape() == eqex::ad::Shape{n, 2});
  CHECK(full.tokens.shape() == eqex::ad::Shape{n, cfg.hidden});
  CHECK(!all_zero(full.in_context));
  CHECK(!all_zero(full.type_attn));

  cfg.use_in_context_attn = false;
  Model no_ctx = tiny_model(cfg);
  const TriggerForward f1 = trigger_forward(no_ctx, sent, type_def, nullptr);
  CHECK(all_zero(f1.in_context));
  CHECK(f1.in_context.shape() == full.in_context.shape());
  CHECK(!all_zero(f1.type_attn));

  cfg = tiny_config();
  cfg.use_event_type_attn = false;
  Model no_type = tiny_model(cfg);
  const TriggerForward f2 = trigger_forward(no_type, sent, type_def, nullptr);
  CHECK(all_zero(f2.type_attn));
  CHECK(!all_zero(f2.in_context));
}

TEST_CASE("argument feature flags zero exactly their flows") {
  const eqex::fixture::Fixture fix = eqex::fixture::make_overfit_fixture(7);
  // Find a sentence with an event and at least two entities.
  const SentenceExample* sent = nullptr;
  for (const auto& s : fix.sentences) {
    if (!s.events.empty() && s.entities.size() >= 2) {
      sent = &s;
      break;
    }
  }
  REQUIRE(sent != nullptr);
  const auto& ev = sent->events.front();

  TrainConfig cfg = tiny_config();
  Model model = tiny_model(cfg);
  const ArgumentForward full = argument_forward(
      model, *sent, sent->entities, ev.type, ev.trigger, nullptr);
  const auto* def = fix.ontology.find_type(ev.type);
  REQUIRE(def != nullptr);
  CHECK(full.roles == def->roles);
  CHECK(full.logits.size() == def->roles.size() + 1);
  for (const Tensor& l : full.logits) {
    CHECK(l.shape() == eqex::ad::Shape{sent->entities.size(), 2});
  }
  CHECK(!all_zero(full.flows.entity_to_role));
  CHECK(!all_zero(full.flows.role_to_entity));
  CHECK(!all_zero(full.flows.entity_self));
  CHECK(!all_zero(full.flows.role_self));

  cfg.use_multiway = false;
  Model no_multi = tiny_model(cfg);
  const ArgumentForward f1 = argument_forward(
      no_multi, *sent, sent->entities, ev.type, ev.trigger, nullptr);
  CHECK(all_zero(f1.flows.entity_to_role));
  CHECK(all_zero(f1.flows.role_to_entity));
  CHECK(all_zero(f1.flows.entity_self));
  CHECK(all_zero(f1.flows.role_self));

  cfg = tiny_config();
  cfg.use_entity_self_attn = false;
  Model no_ent = tiny_model(cfg);
  const ArgumentForward f2 = argument_forward(
      no_ent, *sent, sent->entities, ev.type, ev.trigger, nullptr);
  CHECK(all_zero(f2.flows.entity_self));
  CHECK(!all_zero(f2.flows.role_self));
  CHECK(!all_zero(f2.flows.entity_to_role));

  cfg = tiny_config();
  cfg.use_role_self_attn = false;
  Model no_role = tiny_model(cfg);
  const ArgumentForward f3 = argument_forward(
      no_role, *sent, sent->entities, ev.type, ev.trigger, nullptr);
  CHECK(all_zero(f3.flows.role_self));
  CHECK(!all_zero(f3.flows.entity_self));
}

TEST_CASE("stage_loss skips sentences that contribute nothing") {
  Model model = tiny_model(tiny_config());
  SentenceExample empty;
  empty.id = "none";
  empty.tokens = {"quiet", "day"};
  empty.pos = {"ADJ", "NOUN"};
  const Tensor arg_loss = stage_loss(model, "argument", empty, nullptr);
  CHECK(!arg_loss.defined());
  CHECK_THROWS_AS(stage_loss(model, "bogus", empty, nullptr),
                  ValidationError);
}

TEST_CASE("checkpoints round-trip and guard the ontology pairing") {
  const eqex::fixture::Fixture fix = eqex::fixture::make_overfit_fixture(7);
  const TrainConfig cfg = tiny_config();
  Model model = tiny_model(cfg);

  // A short training step makes the checkpoint non-trivial.
  std::vector<SentenceExample> mini(fix.sentences.begin(),
                                    fix.sentences.begin() + 4);
  train_stage(model, "trigger", mini);

  const std::string path = "scratch_ckpt.bin";
  save_checkpoint(path, model);

  Model loaded = load_checkpoint(path, fix.ontology);
  CHECK(loaded.stage == model.stage);
  CHECK(loaded.vocab.tokens() == model.vocab.tokens());
  CHECK(loaded.entity_types == model.entity_types);

  // Reserializing the loaded model reproduces the file byte for byte.
  const std::string path2 = "scratch_ckpt2.bin";
  save_checkpoint(path2, loaded);
  CHECK(read_bytes(path) == read_bytes(path2));

  // Predictions survive the round trip unchanged.
  const auto before = predict_corpus(model, mini);
  const auto after = predict_corpus(loaded, mini);
  eqex::eval::save_predictions("scratch_pred_a.jsonl", before);
  eqex::eval::save_predictions("scratch_pred_b.jsonl", after);
  CHECK(read_bytes("scratch_pred_a.jsonl") ==
        read_bytes("scratch_pred_b.jsonl"));

  // A different ontology fails the fingerprint check unless forced.
  eqex::ontology::Ontology other = fix.ontology;
  other.types[0].name = "renamed";
  CHECK_THROWS_AS(load_checkpoint(path, other), ValidationError);
  CHECK_NOTHROW(load_checkpoint(path, other, /*force=*/true));

  // Truncation is detected.
  const std::string bytes = read_bytes(path);
  std::ofstream("scratch_trunc.bin", std::ios::binary)
      << bytes.substr(0, bytes.size() / 2);
  CHECK_THROWS_AS(load_checkpoint("scratch_trunc.bin", fix.ontology),
                  RuntimeFailure);

  std::remove(path.c_str());
  std::remove(path2.c_str());
  std::remove("scratch_pred_a.jsonl");
  std::remove("scratch_pred_b.jsonl");
  std::remove("scratch_trunc.bin");
}

TEST_CASE("experiments validate their specification") {
  const eqex::fixture::Fixture fix = eqex::fixture::make_overfit_fixture(7);
  ExperimentSpec spec;
  spec.mode = "sideways";
  spec.train.sentences = fix.sentences;
  spec.train.ontology = fix.ontology;
  CHECK_THROWS_AS(run_experiment(spec, tiny_config()), ValidationError);

  spec.mode = "supervised";
  spec.train.sentences.clear();
  CHECK_THROWS_AS(run_experiment(spec, tiny_config()), ValidationError);
}
