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

#include "eqex/eval.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "eqex/error.hpp"
#include "json.hpp"

namespace eqex::eval {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json prediction_to_json(const SentencePrediction& p) {
  ordered_json obj;
  obj["id"] = p.id;
  obj["entities"] = ordered_json::array();
  for (const auto& e : p.entities) {
    obj["entities"].push_back(ordered_json{{"id", e.id},
                                           {"start", e.span.start},
                                           {"end", e.span.end},
                                           {"type", e.type}});
  }
  obj["triggers"] = ordered_json::array();
  for (const auto& t : p.triggers) {
    ordered_json jt;
    jt["type"] = t.type;
    jt["start"] = t.span.start;
    jt["end"] = t.span.end;
    jt["prob"] = t.prob;
    jt["arguments"] = ordered_json::array();
    for (const auto& a : t.arguments) {
      jt["arguments"].push_back(ordered_json{
          {"entity_id", a.entity_id}, {"role", a.role}, {"prob", a.prob}});
    }
    obj["triggers"].push_back(std::move(jt));
  }
  return obj;
}

SentencePrediction prediction_from_json(const json& obj,
                                        const std::string& where) {
  auto fail = [&](const std::string& msg) -> ValidationError {
    return ValidationError(where + ": " + msg);
  };
  if (!obj.is_object()) throw fail("expected a JSON object");
  SentencePrediction p;
  if (!obj.contains("id") || !obj["id"].is_string()) {
    throw fail("missing string field 'id'");
  }
  p.id = obj["id"].get<std::string>();
  if (obj.contains("entities")) {
    for (const auto& je : obj["entities"]) {
      corpus::EntityMention e;
      e.id = je.at("id").get<std::string>();
      e.span.start = je.at("start").get<std::size_t>();
      e.span.end = je.at("end").get<std::size_t>();
      e.type = je.value("type", std::string{});
      p.entities.push_back(std::move(e));
    }
  }
  if (obj.contains("triggers")) {
    for (const auto& jt : obj["triggers"]) {
      TriggerPred t;
      t.type = jt.at("type").get<std::string>();
      t.span.start = jt.at("start").get<std::size_t>();
      t.span.end = jt.at("end").get<std::size_t>();
      t.prob = jt.value("prob", 0.0);
      if (jt.contains("arguments")) {
        for (const auto& ja : jt["arguments"]) {
          ArgumentPred a;
          a.entity_id = ja.at("entity_id").get<std::string>();
          a.role = ja.at("role").get<std::string>();
          a.prob = ja.value("prob", 0.0);
          t.arguments.push_back(std::move(a));
        }
      }
      p.triggers.push_back(std::move(t));
    }
  }
  return p;
}

ordered_json prf_to_json(const PRF& prf) {
  return ordered_json{{"gold", prf.gold},
                      {"predicted", prf.predicted},
                      {"correct", prf.correct},
                      {"precision", prf.precision()},
                      {"recall", prf.recall()},
                      {"f1", prf.f1()}};
}

PRF prf_from_json(const json& obj) {
  PRF prf;
  prf.gold = obj.at("gold").get<std::size_t>();
  prf.predicted = obj.at("predicted").get<std::size_t>();
  prf.correct = obj.at("correct").get<std::size_t>();
  return prf;
}

}  // namespace

std::vector<SentencePrediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open predictions file: " + path);
  std::vector<SentencePrediction> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    SentencePrediction p;
    try {
      p = prediction_from_json(obj, where);
    } catch (const json::exception& e) {
      throw ValidationError(where + ": malformed prediction: " + e.what());
    }
    if (!seen.insert(p.id).second) {
      throw ValidationError(where + ": duplicate prediction for sentence '" +
                            p.id + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

void save_predictions(const std::string& path,
                      const std::vector<SentencePrediction>& predictions) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write predictions file: " + path);
  for (const auto& p : predictions) {
    out << prediction_to_json(p).dump() << "\n";
  }
  if (!out) throw RuntimeFailure("write failed: " + path);
}

double PRF::precision() const {
  return predicted == 0 ? 0.0
                        : static_cast<double>(correct) /
                              static_cast<double>(predicted);
}

double PRF::recall() const {
  return gold == 0 ? 0.0
                   : static_cast<double>(correct) / static_cast<double>(gold);
}

double PRF::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

ScoreReport score(const std::vector<corpus::SentenceExample>& gold,
                  const std::vector<SentencePrediction>& predictions) {
  std::map<std::string, const corpus::SentenceExample*> by_id;
  for (const auto& s : gold) by_id[s.id] = &s;

  ScoreReport report;

  // Gold counts come from every gold sentence, whether or not the system
  // produced output for it.
  struct GoldArg {
    corpus::Span span;
    std::string role;
    bool matched = false;
  };
  struct GoldEvent {
    std::string type;
    corpus::Span span;
    std::vector<GoldArg> args;
    bool matched = false;
  };
  std::map<std::string, std::vector<GoldEvent>> gold_events;
  for (const auto& s : gold) {
    auto& events = gold_events[s.id];
    for (const auto& ev : s.events) {
      GoldEvent ge;
      ge.type = ev.type;
      ge.span = ev.trigger;
      for (const auto& arg : ev.arguments) {
        const corpus::EntityMention* ent = s.find_entity(arg.entity_id);
        if (ent == nullptr) {
          throw ValidationError("sentence '" + s.id + "': gold argument '" +
                                arg.entity_id + "' has no entity mention");
        }
        ge.args.push_back(GoldArg{ent->span, arg.role, false});
      }
      report.trigger.gold += 1;
      report.trigger_by_type[ev.type].gold += 1;
      report.argument.gold += ge.args.size();
      report.argument_by_type[ev.type].gold += ge.args.size();
      events.push_back(std::move(ge));
    }
  }

  std::set<std::string> seen_pred_ids;
  for (const auto& pred : predictions) {
    auto it = by_id.find(pred.id);
    if (it == by_id.end()) {
      throw ValidationError("prediction for unknown sentence id '" + pred.id +
                            "'");
    }
    if (!seen_pred_ids.insert(pred.id).second) {
      throw ValidationError("duplicate prediction for sentence '" + pred.id +
                            "'");
    }
    std::map<std::string, corpus::Span> entity_spans;
    for (const auto& e : pred.entities) entity_spans[e.id] = e.span;
    auto& events = gold_events[pred.id];

    for (const auto& t : pred.triggers) {
      report.trigger.predicted += 1;
      report.trigger_by_type[t.type].predicted += 1;
      GoldEvent* matched_event = nullptr;
      for (auto& ge : events) {
        if (!ge.matched && ge.type == t.type && ge.span == t.span) {
          ge.matched = true;
          matched_event = &ge;
          break;
        }
      }
      if (matched_event != nullptr) {
        report.trigger.correct += 1;
        report.trigger_by_type[t.type].correct += 1;
      }
      for (const auto& a : t.arguments) {
        report.argument.predicted += 1;
        report.argument_by_type[t.type].predicted += 1;
        auto span_it = entity_spans.find(a.entity_id);
        if (span_it == entity_spans.end()) {
          throw ValidationError("sentence '" + pred.id + "': argument '" +
                                a.entity_id +
                                "' is not in the prediction's entity table");
        }
        if (matched_event == nullptr) continue;  // wrong trigger: never correct
        for (auto& ga : matched_event->args) {
          if (!ga.matched && ga.role == a.role && ga.span == span_it->second) {
            ga.matched = true;
            report.argument.correct += 1;
            report.argument_by_type[t.type].correct += 1;
            break;
          }
        }
      }
    }
  }
  return report;
}

std::string report_to_json(const ScoreReport& report) {
  ordered_json obj;
  obj["trigger"] = prf_to_json(report.trigger);
  obj["argument"] = prf_to_json(report.argument);
  obj["trigger_by_type"] = ordered_json::object();
  for (const auto& [type, prf] : report.trigger_by_type) {
    obj["trigger_by_type"][type] = prf_to_json(prf);
  }
  obj["argument_by_type"] = ordered_json::object();
  for (const auto& [type, prf] : report.argument_by_type) {
    obj["argument_by_type"][type] = prf_to_json(prf);
  }
  obj["metadata"] = ordered_json::object();
  for (const auto& [key, value] : report.metadata) {
    obj["metadata"][key] = value;
  }
  return obj.dump(2);
}

ScoreReport report_from_json(const std::string& json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("invalid report JSON: ") + e.what());
  }
  ScoreReport report;
  try {
    report.trigger = prf_from_json(obj.at("trigger"));
    report.argument = prf_from_json(obj.at("argument"));
    for (const auto& [type, prf] : obj.at("trigger_by_type").items()) {
      report.trigger_by_type[type] = prf_from_json(prf);
    }
    for (const auto& [type, prf] : obj.at("argument_by_type").items()) {
      report.argument_by_type[type] = prf_from_json(prf);
    }
    if (obj.contains("metadata")) {
      for (const auto& [key, value] : obj["metadata"].items()) {
        report.metadata[key] = value.get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report JSON: ") + e.what());
  }
  return report;
}

void save_report(const std::string& path, const ScoreReport& report) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write report file: " + path);
  out << report_to_json(report) << "\n";
  if (!out) throw RuntimeFailure("write failed: " + path);
}

ScoreReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open report file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return report_from_json(buffer.str());
}

std::string format_report(const ScoreReport& report) {
  std::ostringstream out;
  auto line = [&out](const std::string& label, const PRF& prf) {
    out << std::left << std::setw(24) << label << std::right << std::fixed
        << std::setprecision(4) << std::setw(9) << prf.precision()
        << std::setw(9) << prf.recall() << std::setw(9) << prf.f1()
        << std::setw(7) << prf.gold << std::setw(7) << prf.predicted
        << std::setw(9) << prf.correct << "\n";
  };
  out << std::left << std::setw(24) << "" << std::right << std::setw(9) << "P"
      << std::setw(9) << "R" << std::setw(9) << "F1" << std::setw(7) << "gold"
      << std::setw(7) << "pred" << std::setw(9) << "correct" << "\n";
  line("trigger", report.trigger);
  line("argument", report.argument);
  if (!report.trigger_by_type.empty()) {
    out << "trigger by type:\n";
    for (const auto& [type, prf] : report.trigger_by_type) {
      line("  " + type, prf);
    }
  }
  if (!report.argument_by_type.empty()) {
    out << "argument by type:\n";
    for (const auto& [type, prf] : report.argument_by_type) {
      line("  " + type, prf);
    }
  }
  if (!report.metadata.empty()) {
    out << "metadata:\n";
    for (const auto& [key, value] : report.metadata) {
      out << "  " << key << " = " << value << "\n";
    }
  }
  return out.str();
}

}  // namespace eqex::eval
