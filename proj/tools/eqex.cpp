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
//
// eqex command-line tool. Exit codes: 0 success, 1 input/validation error,
// 2 runtime failure. All commands are deterministic for a fixed --seed.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "eqex/corpus.hpp"
#include "eqex/error.hpp"
#include "eqex/eval.hpp"
#include "eqex/fixture.hpp"
#include "eqex/gradcheck.hpp"
#include "eqex/log.hpp"
#include "eqex/ontology.hpp"
#include "eqex/pipeline.hpp"
#include "eqex/vocab.hpp"

namespace {

using eqex::RuntimeFailure;
using eqex::ValidationError;
namespace corpus = eqex::corpus;
namespace eval = eqex::eval;
namespace fixture = eqex::fixture;
namespace ontology = eqex::ontology;
namespace pipeline = eqex::pipeline;
namespace vocab = eqex::vocab;

// One CLI option per training-config key (flag names are the JSON keys with
// hyphens). Only keys the user actually passed override the base config, so
// the precedence is: built-in defaults < --config file < command line.
class ConfigFlags {
 public:
  void attach(CLI::App& cmd) {
    option(cmd, "--seed", &pipeline::TrainConfig::seed,
           "Root random seed for initialization and training");
    option(cmd, "--epochs", &pipeline::TrainConfig::epochs,
           "Training epochs per stage");
    option(cmd, "--learning-rate", &pipeline::TrainConfig::learning_rate,
           "Adam learning rate");
    option(cmd, "--batch-size", &pipeline::TrainConfig::batch_size,
           "Sentences per optimizer step");
    option(cmd, "--dropout", &pipeline::TrainConfig::dropout,
           "Dropout rate during training");
    option(cmd, "--prototypes-k", &pipeline::TrainConfig::prototypes_k,
           "Seed trigger words appended to each event type query");
    option(cmd, "--attn-avg-layers", &pipeline::TrainConfig::attn_avg_layers,
           "Final encoder layers averaged into the in-context attention");
    option(cmd, "--negative-sample-rate",
           &pipeline::TrainConfig::negative_sample_rate,
           "Fraction of event-free sentences kept for trigger training");
    option(cmd, "--hidden", &pipeline::TrainConfig::hidden,
           "Encoder hidden size");
    option(cmd, "--layers", &pipeline::TrainConfig::layers, "Encoder layers");
    option(cmd, "--heads", &pipeline::TrainConfig::heads,
           "Encoder attention heads");
    option(cmd, "--max-len", &pipeline::TrainConfig::max_len,
           "Maximum query length in tokens");
    option(cmd, "--vocab-min-freq", &pipeline::TrainConfig::vocab_min_freq,
           "Frequency floor for vocabulary words");
    option(cmd, "--threshold", &pipeline::TrainConfig::threshold,
           "Positive-probability cutoff for decoding");
    flag(cmd, "--use-prototypes", &pipeline::TrainConfig::use_prototypes,
         "Append prototype triggers to event type queries");
    flag(cmd, "--use-in-context-attn",
         &pipeline::TrainConfig::use_in_context_attn,
         "Attention-weighted context feature for trigger detection");
    flag(cmd, "--use-event-type-attn",
         &pipeline::TrainConfig::use_event_type_attn,
         "Query-similarity feature for trigger detection");
    flag(cmd, "--use-multiway", &pipeline::TrainConfig::use_multiway,
         "All four entity/role attention flows for argument extraction");
    flag(cmd, "--use-entity-self-attn",
         &pipeline::TrainConfig::use_entity_self_attn,
         "Entity-to-entity self-attention flow");
    flag(cmd, "--use-role-self-attn",
         &pipeline::TrainConfig::use_role_self_attn,
         "Role-to-role self-attention flow");
    flag(cmd, "--use-gold-entities", &pipeline::TrainConfig::use_gold_entities,
         "Skip the entity tagger and use annotated entity mentions");
    flag(cmd, "--use-gold-triggers", &pipeline::TrainConfig::use_gold_triggers,
         "Use annotated triggers instead of the trigger head at decode time");
  }

  void apply(pipeline::TrainConfig& cfg) const {
    for (const auto& [opt, assign] : appliers_) {
      if (opt->count() > 0) assign(cfg);
    }
  }

 private:
  template <typename T>
  void option(CLI::App& cmd, const std::string& name,
              T pipeline::TrainConfig::*field, const std::string& help) {
    CLI::Option* opt = cmd.add_option(name, staged_.*field, help);
    appliers_.emplace_back(opt, [this, field](pipeline::TrainConfig& cfg) {
      cfg.*field = staged_.*field;
    });
  }

  void flag(CLI::App& cmd, const std::string& name,
            bool pipeline::TrainConfig::*field, const std::string& help) {
    CLI::Option* opt =
        cmd.add_flag(name + ",!--no" + name.substr(1), staged_.*field, help);
    appliers_.emplace_back(opt, [this, field](pipeline::TrainConfig& cfg) {
      cfg.*field = staged_.*field;
    });
  }

  pipeline::TrainConfig staged_;
  std::vector<std::pair<CLI::Option*,
                        std::function<void(pipeline::TrainConfig&)>>>
      appliers_;
};

pipeline::TrainConfig resolve_config(const std::string& config_path,
                                     const ConfigFlags& flags) {
  pipeline::TrainConfig cfg;
  if (!config_path.empty()) cfg = pipeline::load_config(config_path);
  flags.apply(cfg);
  pipeline::validate_config(cfg);
  return cfg;
}

// Parameter shapes are fixed at initialization; resuming from a checkpoint
// may change run hyperparameters but never the architecture.
void require_same_architecture(const pipeline::TrainConfig& was,
                               const pipeline::TrainConfig& now,
                               const std::string& who) {
  auto refuse = [&](const std::string& key) {
    throw ValidationError(who + ": cannot change '" + key +
                          "' of an initialized model");
  };
  if (was.hidden != now.hidden) refuse("hidden");
  if (was.layers != now.layers) refuse("layers");
  if (was.heads != now.heads) refuse("heads");
  if (was.max_len != now.max_len) refuse("max_len");
  if (was.attn_avg_layers != now.attn_avg_layers) refuse("attn_avg_layers");
}

std::vector<std::string> entity_inventory(
    const std::vector<corpus::SentenceExample>& sentences) {
  std::vector<std::string> types = pipeline::derive_entity_types(sentences);
  if (types.empty()) types.push_back("entity");
  return types;
}

int run_build_vocab(const std::vector<std::string>& corpus_paths,
                    const std::vector<std::string>& ontology_paths,
                    const std::string& out, std::size_t min_freq) {
  std::vector<std::vector<corpus::SentenceExample>> corpora;
  corpora.reserve(corpus_paths.size());
  for (const std::string& path : corpus_paths) {
    corpora.push_back(corpus::load_corpus(path, nullptr));
  }
  std::vector<ontology::Ontology> ontologies;
  ontologies.reserve(ontology_paths.size());
  for (const std::string& path : ontology_paths) {
    ontologies.push_back(ontology::load_ontology(path));
  }
  std::vector<const std::vector<corpus::SentenceExample>*> corpus_ptrs;
  for (const auto& c : corpora) corpus_ptrs.push_back(&c);
  std::vector<const ontology::Ontology*> ontology_ptrs;
  for (const auto& o : ontologies) ontology_ptrs.push_back(&o);
  vocab::Vocab v = vocab::Vocab::build(corpus_ptrs, ontology_ptrs, min_freq);
  v.to_file(out);
  std::cout << "wrote " << v.size() << " tokens to " << out << "\n";
  return 0;
}

int run_select_prototypes(const std::string& corpus_path,
                          const std::string& ontology_path, std::size_t k,
                          std::string out) {
  if (out.empty()) out = ontology_path;
  ontology::Ontology ont = ontology::load_ontology(ontology_path);
  const std::vector<corpus::SentenceExample> data =
      corpus::load_corpus(corpus_path, &ont);
  ontology::select_all_prototypes(data, ont, k);
  ontology::save_ontology(out, ont);
  for (const ontology::EventTypeDef& type : ont.types) {
    std::ostringstream line;
    line << type.name << ":";
    for (const std::string& p : type.prototypes) line << " " << p;
    std::cout << line.str() << "\n";
  }
  std::cout << "wrote ontology with prototypes to " << out << "\n";
  return 0;
}

int run_gen_fixture(const std::string& kind, std::uint64_t seed,
                    const std::string& out_dir) {
  fixture::Fixture fx;
  if (kind == "overfit") {
    fx = fixture::make_overfit_fixture(seed);
  } else if (kind == "zeroshot") {
    fx = fixture::make_zeroshot_fixture(seed);
  } else {
    throw ValidationError("gen-fixture: unknown kind '" + kind + "'");
  }
  std::filesystem::create_directories(out_dir);
  const std::string corpus_path =
      (std::filesystem::path(out_dir) / "corpus.jsonl").string();
  const std::string ontology_path =
      (std::filesystem::path(out_dir) / "ontology.json").string();
  corpus::save_corpus(corpus_path, fx.sentences);
  ontology::save_ontology(ontology_path, fx.ontology);
  std::cout << "wrote " << fx.sentences.size() << " sentences to "
            << corpus_path << "\n";
  std::cout << "wrote " << fx.ontology.types.size() << " event types to "
            << ontology_path << "\n";
  return 0;
}

int run_train(const std::string& stage, const std::string& corpus_path,
              const std::string& ontology_path, const std::string& ckpt_path,
              const std::string& config_path, const std::string& init_ckpt,
              const ConfigFlags& flags) {
  ontology::Ontology ont = ontology::load_ontology(ontology_path);
  const std::vector<corpus::SentenceExample> train =
      corpus::load_corpus(corpus_path, &ont);

  pipeline::Model model;
  if (!init_ckpt.empty()) {
    model = pipeline::load_checkpoint(init_ckpt, ont);
    pipeline::TrainConfig cfg = model.config;
    if (!config_path.empty()) cfg = pipeline::load_config(config_path);
    flags.apply(cfg);
    pipeline::validate_config(cfg);
    require_same_architecture(model.config, cfg, "train");
    model.config = cfg;
  } else {
    const pipeline::TrainConfig cfg = resolve_config(config_path, flags);
    vocab::Vocab v =
        vocab::Vocab::build({&train}, {&ont}, cfg.vocab_min_freq);
    model = pipeline::init_model(cfg, std::move(v), std::move(ont),
                                 entity_inventory(train));
  }

  std::vector<pipeline::StageStats> stats;
  if (stage == "all") {
    stats = pipeline::train_all(model, train);
  } else {
    stats.push_back(pipeline::train_stage(model, stage, train));
  }
  pipeline::save_checkpoint(ckpt_path, model);
  for (const pipeline::StageStats& s : stats) {
    std::ostringstream line;
    line << s.stage << ": " << s.epoch_mean_loss.size() << " epochs";
    if (!s.epoch_mean_loss.empty()) {
      line << ", loss " << s.epoch_mean_loss.front() << " -> "
           << s.epoch_mean_loss.back();
    }
    std::cout << line.str() << "\n";
  }
  std::cout << "wrote checkpoint to " << ckpt_path << "\n";
  return 0;
}

int run_predict(const std::string& ckpt_path, const std::string& ontology_path,
                const std::string& corpus_path, const std::string& out,
                bool gold_entities, bool gold_triggers,
                const std::string& tagger_ckpt) {
  if (gold_entities && !tagger_ckpt.empty()) {
    throw ValidationError(
        "predict: --gold-entities conflicts with --tagger-ckpt");
  }
  const ontology::Ontology ont = ontology::load_ontology(ontology_path);
  std::vector<corpus::SentenceExample> data =
      corpus::load_corpus(corpus_path, &ont);
  pipeline::Model model = pipeline::load_checkpoint(ckpt_path, ont);
  if (gold_entities) model.config.use_gold_entities = true;
  if (gold_triggers) model.config.use_gold_triggers = true;
  if (!tagger_ckpt.empty()) {
    // A separately trained tagger is a self-contained model; run it over the
    // corpus first and treat its mentions as the entity tables.
    const pipeline::Model tagger = pipeline::load_checkpoint(tagger_ckpt, ont);
    for (corpus::SentenceExample& sentence : data) {
      sentence.entities = pipeline::tag_sentence(tagger, sentence);
      for (corpus::EventMention& event : sentence.events) {
        event.arguments.clear();  // gold ids no longer resolve
      }
    }
    model.config.use_gold_entities = true;
  }
  const std::vector<eval::SentencePrediction> preds =
      pipeline::predict_corpus(model, data);
  eval::save_predictions(out, preds);
  std::cout << "wrote " << preds.size() << " predictions to " << out << "\n";
  return 0;
}

int run_evaluate(const std::string& gold_path, const std::string& pred_path,
                 const std::string& ontology_path,
                 const std::string& report_path) {
  ontology::Ontology ont;
  const ontology::Ontology* ont_ptr = nullptr;
  if (!ontology_path.empty()) {
    ont = ontology::load_ontology(ontology_path);
    ont_ptr = &ont;
  }
  const std::vector<corpus::SentenceExample> gold =
      corpus::load_corpus(gold_path, ont_ptr);
  const std::vector<eval::SentencePrediction> preds =
      eval::load_predictions(pred_path);
  const eval::ScoreReport report = eval::score(gold, preds);
  std::cout << eval::format_report(report);
  if (!report_path.empty()) {
    eval::save_report(report_path, report);
    std::cout << "wrote report to " << report_path << "\n";
  }
  return 0;
}

int run_experiment(const std::string& mode, const std::string& train_corpus,
                   const std::string& train_ontology,
                   const std::string& test_corpus,
                   const std::string& test_ontology,
                   const std::string& extra_corpus,
                   const std::string& extra_ontology,
                   const std::vector<std::string>& seen, bool sequential,
                   const std::string& config_path, const ConfigFlags& flags,
                   const std::string& report_path,
                   const std::string& pred_out) {
  const pipeline::TrainConfig cfg = resolve_config(config_path, flags);

  pipeline::ExperimentSpec spec;
  spec.mode = mode;
  spec.seen_types = seen;
  spec.sequential = sequential;
  spec.train.ontology = ontology::load_ontology(train_ontology);
  spec.train.sentences =
      corpus::load_corpus(train_corpus, &spec.train.ontology);
  if (!test_corpus.empty()) {
    spec.test.ontology = test_ontology.empty()
                             ? spec.train.ontology
                             : ontology::load_ontology(test_ontology);
    spec.test.sentences = corpus::load_corpus(test_corpus, &spec.test.ontology);
  }
  if (!extra_corpus.empty()) {
    spec.extra.ontology = extra_ontology.empty()
                              ? spec.train.ontology
                              : ontology::load_ontology(extra_ontology);
    spec.extra.sentences =
        corpus::load_corpus(extra_corpus, &spec.extra.ontology);
  }

  const pipeline::ExperimentResult result = pipeline::run_experiment(spec, cfg);
  std::cout << eval::format_report(result.report);
  if (!report_path.empty()) {
    eval::save_report(report_path, result.report);
    std::cout << "wrote report to " << report_path << "\n";
  }
  if (!pred_out.empty()) {
    eval::save_predictions(pred_out, result.predictions);
    std::cout << "wrote " << result.predictions.size() << " predictions to "
              << pred_out << "\n";
  }
  return 0;
}

int run_gradcheck(std::uint64_t seed, std::size_t rounds) {
  const eqex::gradcheck::Result result = eqex::gradcheck::run(seed, rounds);
  std::ostringstream line;
  line << "gradient check: " << result.checks << " comparisons, max relative"
       << " error " << result.max_rel_err << " at " << result.worst_site
       << " (tolerance " << eqex::gradcheck::kTolerance << ")";
  std::cout << line.str() << "\n";
  if (result.max_rel_err > eqex::gradcheck::kTolerance) {
    std::cerr << "error: gradient check failed\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"query-driven event extraction toolkit"};
  app.require_subcommand(1);

  std::string workdir;
  app.add_option("--workdir", workdir,
                 "Directory all relative paths are resolved against");
  std::size_t threads = 1;
  app.add_option(
      "--threads", threads,
      "Accepted for interface compatibility; execution is single-threaded");

  // --- build-vocab ---------------------------------------------------------
  CLI::App* vocab_cmd =
      app.add_subcommand("build-vocab", "Build a vocabulary file");
  std::vector<std::string> bv_corpora;
  std::vector<std::string> bv_ontologies;
  std::string bv_out;
  std::size_t bv_min_freq = 1;
  vocab_cmd->add_option("--corpus", bv_corpora, "Corpus JSONL file(s)")
      ->required();
  vocab_cmd->add_option("--ontology", bv_ontologies, "Ontology JSON file(s)");
  vocab_cmd->add_option("--out", bv_out, "Output vocabulary file")->required();
  vocab_cmd->add_option("--min-freq", bv_min_freq,
                        "Frequency floor for corpus words");

  // --- select-prototypes ---------------------------------------------------
  CLI::App* proto_cmd = app.add_subcommand(
      "select-prototypes", "Rank and store seed trigger words per event type");
  std::string sp_corpus;
  std::string sp_ontology;
  std::string sp_out;
  std::size_t sp_k = ontology::kDefaultPrototypes;
  proto_cmd->add_option("--corpus", sp_corpus, "Annotated corpus JSONL")
      ->required();
  proto_cmd->add_option("--ontology", sp_ontology, "Ontology JSON to fill in")
      ->required();
  proto_cmd->add_option("--k", sp_k, "Prototype triggers per type");
  proto_cmd->add_option("--out", sp_out,
                        "Output ontology path (default: rewrite --ontology)");

  // --- gen-fixture ---------------------------------------------------------
  CLI::App* fixture_cmd = app.add_subcommand(
      "gen-fixture", "Generate a synthetic corpus and ontology");
  std::string gf_kind;
  std::uint64_t gf_seed = 13;
  std::string gf_out_dir;
  fixture_cmd->add_option("--kind", gf_kind, "Fixture family")
      ->required()
      ->check(CLI::IsMember({"overfit", "zeroshot"}));
  fixture_cmd->add_option("--seed", gf_seed, "Generation seed");
  fixture_cmd->add_option("--out-dir", gf_out_dir, "Output directory")
      ->required();

  // --- train ---------------------------------------------------------------
  CLI::App* train_cmd =
      app.add_subcommand("train", "Train one stage or the full pipeline");
  std::string tr_stage = "all";
  std::string tr_corpus;
  std::string tr_ontology;
  std::string tr_ckpt;
  std::string tr_config;
  std::string tr_init_ckpt;
  ConfigFlags tr_flags;
  train_cmd->add_option("--stage", tr_stage, "Stage to train")
      ->check(CLI::IsMember({"tagger", "trigger", "argument", "all"}));
  train_cmd->add_option("--corpus", tr_corpus, "Training corpus JSONL")
      ->required();
  train_cmd->add_option("--ontology", tr_ontology, "Ontology JSON")
      ->required();
  train_cmd->add_option("--ckpt", tr_ckpt, "Output checkpoint path")
      ->required();
  train_cmd->add_option("--config", tr_config, "Training config JSON");
  train_cmd->add_option("--init-ckpt", tr_init_ckpt,
                        "Checkpoint to continue training from");
  tr_flags.attach(*train_cmd);

  // --- predict -------------------------------------------------------------
  CLI::App* predict_cmd =
      app.add_subcommand("predict", "Decode events for a corpus");
  std::string pr_ckpt;
  std::string pr_ontology;
  std::string pr_corpus;
  std::string pr_out;
  bool pr_gold_entities = false;
  bool pr_gold_triggers = false;
  std::string pr_tagger_ckpt;
  predict_cmd->add_option("--ckpt", pr_ckpt, "Model checkpoint")->required();
  predict_cmd->add_option("--ontology", pr_ontology, "Ontology JSON")
      ->required();
  predict_cmd->add_option("--corpus", pr_corpus, "Input corpus JSONL")
      ->required();
  predict_cmd->add_option("--out", pr_out, "Output predictions JSONL")
      ->required();
  predict_cmd->add_flag("--gold-entities", pr_gold_entities,
                        "Use annotated entity mentions");
  predict_cmd->add_flag("--gold-triggers", pr_gold_triggers,
                        "Use annotated triggers, decode arguments only");
  predict_cmd->add_option("--tagger-ckpt", pr_tagger_ckpt,
                          "Separately trained entity tagger checkpoint");

  // --- evaluate ------------------------------------------------------------
  CLI::App* eval_cmd =
      app.add_subcommand("evaluate", "Score predictions against gold");
  std::string ev_gold;
  std::string ev_pred;
  std::string ev_ontology;
  std::string ev_report;
  eval_cmd->add_option("--gold", ev_gold, "Gold corpus JSONL")->required();
  eval_cmd->add_option("--pred", ev_pred, "Predictions JSONL")->required();
  eval_cmd->add_option("--ontology", ev_ontology,
                       "Ontology JSON to validate gold against");
  eval_cmd->add_option("--report", ev_report, "Output report JSON");

  // --- experiment ----------------------------------------------------------
  CLI::App* exp_cmd = app.add_subcommand(
      "experiment", "Run a full train/predict/score protocol");
  std::string ex_mode;
  std::string ex_train_corpus;
  std::string ex_train_ontology;
  std::string ex_test_corpus;
  std::string ex_test_ontology;
  std::string ex_extra_corpus;
  std::string ex_extra_ontology;
  std::vector<std::string> ex_seen;
  bool ex_sequential = false;
  std::string ex_config;
  std::string ex_report;
  std::string ex_pred_out;
  ConfigFlags ex_flags;
  exp_cmd->add_option("--mode", ex_mode, "Protocol")
      ->required()
      ->check(CLI::IsMember(
          {"supervised", "zero-shot", "direct-transfer", "joint-enhancement"}));
  exp_cmd->add_option("--train-corpus", ex_train_corpus, "Training corpus")
      ->required();
  exp_cmd->add_option("--train-ontology", ex_train_ontology,
                      "Training ontology")
      ->required();
  exp_cmd->add_option("--test-corpus", ex_test_corpus,
                      "Evaluation corpus (default: score on train)");
  exp_cmd->add_option("--test-ontology", ex_test_ontology,
                      "Evaluation ontology (default: training ontology)");
  exp_cmd->add_option("--extra-corpus", ex_extra_corpus,
                      "Second training corpus (joint-enhancement)");
  exp_cmd->add_option("--extra-ontology", ex_extra_ontology,
                      "Second ontology (joint-enhancement)");
  exp_cmd->add_option("--seen", ex_seen,
                      "Event types visible in training (zero-shot)")
      ->delimiter(',');
  exp_cmd->add_flag("--sequential", ex_sequential,
                    "Joint mode: train on the extra corpus first, then train");
  exp_cmd->add_option("--config", ex_config, "Training config JSON");
  exp_cmd->add_option("--report", ex_report, "Output report JSON");
  exp_cmd->add_option("--pred-out", ex_pred_out, "Output predictions JSONL");
  ex_flags.attach(*exp_cmd);

  // --- gradcheck -----------------------------------------------------------
  CLI::App* grad_cmd = app.add_subcommand(
      "gradcheck", "Compare analytic gradients with finite differences");
  std::uint64_t gc_seed = 7;
  std::size_t gc_rounds = 20;
  grad_cmd->add_option("--seed", gc_seed, "Base seed");
  grad_cmd->add_option("--rounds", gc_rounds, "Fresh models to check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!workdir.empty()) {
      if (!std::filesystem::is_directory(workdir)) {
        throw ValidationError("--workdir is not a directory: " + workdir);
      }
      std::filesystem::current_path(workdir);
    }
    if (vocab_cmd->parsed()) {
      return run_build_vocab(bv_corpora, bv_ontologies, bv_out, bv_min_freq);
    }
    if (proto_cmd->parsed()) {
      return run_select_prototypes(sp_corpus, sp_ontology, sp_k, sp_out);
    }
    if (fixture_cmd->parsed()) {
      return run_gen_fixture(gf_kind, gf_seed, gf_out_dir);
    }
    if (train_cmd->parsed()) {
      return run_train(tr_stage, tr_corpus, tr_ontology, tr_ckpt, tr_config,
                       tr_init_ckpt, tr_flags);
    }
    if (predict_cmd->parsed()) {
      return run_predict(pr_ckpt, pr_ontology, pr_corpus, pr_out,
                         pr_gold_entities, pr_gold_triggers, pr_tagger_ckpt);
    }
    if (eval_cmd->parsed()) {
      return run_evaluate(ev_gold, ev_pred, ev_ontology, ev_report);
    }
    if (exp_cmd->parsed()) {
      return run_experiment(ex_mode, ex_train_corpus, ex_train_ontology,
                            ex_test_corpus, ex_test_ontology, ex_extra_corpus,
                            ex_extra_ontology, ex_seen, ex_sequential,
                            ex_config, ex_flags, ex_report, ex_pred_out);
    }
    if (grad_cmd->parsed()) {
      return run_gradcheck(gc_seed, gc_rounds);
    }
    throw ValidationError("no command given");
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const RuntimeFailure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
