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

#include "eqex/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "eqex/error.hpp"
#include "eqex/pipeline.hpp"
#include "eqex/rng.hpp"
#include "eqex/tensor.hpp"

namespace eqex::gradcheck {
namespace {

constexpr double kEpsilon = 1e-4;

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Two-sentence micro corpus exercising every loss term: two event types,
// multi-token entity, an entity with no role, two arguments sharing a role.
pipeline::DataSet micro_dataset() {
  using corpus::SentenceExample;
  pipeline::DataSet data;
  data.ontology.name = "micro";
  data.ontology.types.push_back({"attack", {"attacker", "place"}, {"raided"}});
  data.ontology.types.push_back({"meet", {"participant"}, {"met"}});

  SentenceExample s1;
  s1.id = "g1";
  s1.tokens = {"armed", "men", "raided", "mosul", "today"};
  s1.entities = {{"e0", {0, 2}, "per"}, {"e1", {3, 4}, "loc"}};
  s1.events = {{"attack", {2, 3}, {{"e0", "attacker"}, {"e1", "place"}}}};
  s1.pos = corpus::fallback_pos_tag(s1.tokens);

  SentenceExample s2;
  s2.id = "g2";
  s2.tokens = {"leaders", "met", "workers", "in", "paris"};
  s2.entities = {{"e0", {0, 1}, "per"},
                 {"e1", {2, 3}, "per"},
                 {"e2", {4, 5}, "loc"}};
  // e2 fills no role: the no-role column gets a positive cell.
  s2.events = {
      {"meet", {1, 2}, {{"e0", "participant"}, {"e1", "participant"}}}};
  s2.pos = corpus::fallback_pos_tag(s2.tokens);

  data.sentences = {s1, s2};
  return data;
}

pipeline::TrainConfig micro_config(std::uint64_t seed) {
  pipeline::TrainConfig cfg;
  cfg.seed = seed;
  cfg.hidden = 8;
  cfg.layers = 2;
  cfg.heads = 2;
  cfg.attn_avg_layers = 2;
  cfg.max_len = 48;
  cfg.dropout = 0.0;  // finite differences need a deterministic graph
  cfg.use_gold_entities = true;
  return cfg;
}

}  // namespace

Result run(std::uint64_t seed, std::size_t rounds) {
  if (rounds == 0) throw ValidationError("gradcheck: rounds must be positive");
  Result result;
  const pipeline::DataSet data = micro_dataset();
  const std::vector<std::string> stages = {"tagger", "trigger", "argument"};

  for (std::size_t round = 0; round < rounds; ++round) {
    const pipeline::TrainConfig cfg = micro_config(seed + round);
    vocab::Vocab vocab =
        vocab::Vocab::build({&data.sentences}, {&data.ontology}, 1);
    pipeline::Model model =
        pipeline::init_model(cfg, std::move(vocab), data.ontology,
                             pipeline::derive_entity_types(data.sentences));
    const corpus::SentenceExample& sentence =
        data.sentences[round % data.sentences.size()];
    Rng coord_rng = Rng(seed).fork("coords." + std::to_string(round));

    for (const std::string& stage : stages) {
      ad::ParameterStore& store = stage == "tagger"    ? model.tagger
                                  : stage == "trigger" ? model.trigger
                                                       : model.argument;
      store.zero_grads();
      ad::Tensor loss = pipeline::stage_loss(model, stage, sentence, nullptr);
      if (!loss.defined()) {
        throw RuntimeFailure("gradcheck: sentence contributes no " + stage +
                             " loss");
      }
      ad::backward(loss);

      // Snapshot analytic gradients, then perturb a deterministic sample of
      // coordinates from every parameter tensor.
      std::map<std::string, std::vector<double>> analytic;
      for (const auto& [name, tensor] : store) {
        analytic[name] = tensor.has_grad()
                             ? tensor.grad()
                             : std::vector<double>(tensor.size(), 0.0);
      }
      for (const auto& [name, tensor] : store) {
        ad::Tensor t = tensor;
        const std::size_t n = t.size();
        const std::size_t samples = std::min<std::size_t>(n, 4);
        for (std::size_t k = 0; k < samples; ++k) {
          const std::size_t idx =
              static_cast<std::size_t>(coord_rng.uniform_int(n));
          const double saved = t.mutable_values()[idx];
          t.mutable_values()[idx] = saved + kEpsilon;
          const double up =
              pipeline::stage_loss(model, stage, sentence, nullptr).value();
          t.mutable_values()[idx] = saved - kEpsilon;
          const double down =
              pipeline::stage_loss(model, stage, sentence, nullptr).value();
          t.mutable_values()[idx] = saved;
          const double fd = (up - down) / (2.0 * kEpsilon);
          const double err = rel_err(analytic[name][idx], fd);
          ++result.checks;
          if (err > result.max_rel_err) {
            result.max_rel_err = err;
            result.worst_site = stage + "/" + name;
          }
        }
      }
    }
  }
  return result;
}

}  // namespace eqex::gradcheck
