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

#include "eqex/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "eqex/error.hpp"
#include "eqex/log.hpp"
#include "eqex/ontology.hpp"
#include "json.hpp"

namespace eqex::corpus {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool all_punct(const std::string& s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (!std::ispunct(c)) return false;
  }
  return true;
}

bool numeric_like(const std::string& s) {
  bool digit_seen = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    if (std::isdigit(c)) {
      digit_seen = true;
    } else if (c == '.' || c == ',' ||
               ((c == '-' || c == '+') && i == 0)) {
      continue;
    } else {
      return false;
    }
  }
  return digit_seen;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() > suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Closed-class lexicon; each word gets exactly one tag.
const std::map<std::string, std::string>& lexicon() {
  static const std::map<std::string, std::string> table = {
      // Determiners.
      {"a", "DET"}, {"an", "DET"}, {"the", "DET"}, {"this", "DET"},
      {"that", "DET"}, {"these", "DET"}, {"those", "DET"}, {"each", "DET"},
      {"every", "DET"}, {"some", "DET"}, {"any", "DET"}, {"no", "DET"},
      {"either", "DET"}, {"neither", "DET"},
      // Adpositions.
      {"in", "ADP"}, {"on", "ADP"}, {"at", "ADP"}, {"by", "ADP"},
      {"with", "ADP"}, {"from", "ADP"}, {"to", "ADP"}, {"of", "ADP"},
      {"for", "ADP"}, {"over", "ADP"}, {"under", "ADP"}, {"near", "ADP"},
      {"between", "ADP"}, {"through", "ADP"}, {"during", "ADP"},
      {"against", "ADP"}, {"about", "ADP"}, {"across", "ADP"},
      {"behind", "ADP"}, {"into", "ADP"}, {"onto", "ADP"}, {"within", "ADP"},
      {"without", "ADP"}, {"after", "ADP"}, {"before", "ADP"},
      // Auxiliaries.
      {"is", "AUX"}, {"are", "AUX"}, {"was", "AUX"}, {"were", "AUX"},
      {"be", "AUX"}, {"been", "AUX"}, {"being", "AUX"}, {"am", "AUX"},
      {"has", "AUX"}, {"have", "AUX"}, {"had", "AUX"}, {"do", "AUX"},
      {"does", "AUX"}, {"did", "AUX"}, {"will", "AUX"}, {"would", "AUX"},
      {"shall", "AUX"}, {"should", "AUX"}, {"may", "AUX"}, {"might", "AUX"},
      {"must", "AUX"}, {"can", "AUX"}, {"could", "AUX"},
      // Pronouns.
      {"i", "PRON"}, {"you", "PRON"}, {"he", "PRON"}, {"she", "PRON"},
      {"it", "PRON"}, {"we", "PRON"}, {"they", "PRON"}, {"me", "PRON"},
      {"him", "PRON"}, {"her", "PRON"}, {"us", "PRON"}, {"them", "PRON"},
      {"my", "PRON"}, {"your", "PRON"}, {"his", "PRON"}, {"its", "PRON"},
      {"our", "PRON"}, {"their", "PRON"}, {"who", "PRON"}, {"whom", "PRON"},
      {"whose", "PRON"}, {"which", "PRON"}, {"what", "PRON"},
      {"himself", "PRON"}, {"herself", "PRON"}, {"itself", "PRON"},
      {"themselves", "PRON"},
      // Conjunctions.
      {"and", "CCONJ"}, {"or", "CCONJ"}, {"but", "CCONJ"}, {"nor", "CCONJ"},
      {"if", "SCONJ"}, {"because", "SCONJ"}, {"although", "SCONJ"},
      {"though", "SCONJ"}, {"while", "SCONJ"}, {"whereas", "SCONJ"},
      {"unless", "SCONJ"}, {"since", "SCONJ"}, {"whether", "SCONJ"},
      {"when", "SCONJ"}, {"as", "SCONJ"},
      // Particles and adverbs.
      {"not", "PART"}, {"n't", "PART"}, {"'s", "PART"},
      {"very", "ADV"}, {"too", "ADV"}, {"quite", "ADV"}, {"rather", "ADV"},
      {"almost", "ADV"}, {"always", "ADV"}, {"never", "ADV"},
      {"often", "ADV"}, {"sometimes", "ADV"}, {"here", "ADV"},
      {"there", "ADV"}, {"now", "ADV"}, {"then", "ADV"}, {"soon", "ADV"},
      {"already", "ADV"}, {"still", "ADV"}, {"just", "ADV"},
      {"only", "ADV"}, {"also", "ADV"}, {"again", "ADV"},
      {"yesterday", "ADV"}, {"today", "ADV"}, {"tomorrow", "ADV"},
      // Interjections.
      {"oh", "INTJ"}, {"wow", "INTJ"}, {"hey", "INTJ"}, {"hello", "INTJ"},
      {"yes", "INTJ"},
  };
  return table;
}

[[noreturn]] void bad_line(const std::string& where, const std::string& msg) {
  throw ValidationError(where + ": " + msg);
}

// Narrow JSON field access with located error messages.
const json& get_field(const json& obj, const char* key,
                      const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) bad_line(where, std::string("missing field '") + key + "'");
  return *it;
}

std::size_t get_index(const json& v, const char* key,
                      const std::string& where) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    bad_line(where, std::string("field '") + key +
                        "' must be a non-negative integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

void check_known_fields(const json& obj,
                        const std::set<std::string>& known,
                        const std::string& where, bool strict) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (known.count(it.key()) == 0) {
      if (strict) {
        bad_line(where, "unknown field '" + it.key() + "'");
      }
      log::warn(where + ": ignoring unknown field '" + it.key() + "'");
    }
  }
}

SentenceExample sentence_from_json(const json& obj, const std::string& where,
                                   bool strict) {
  if (!obj.is_object()) bad_line(where, "line is not a JSON object");
  check_known_fields(obj, {"id", "tokens", "pos", "entities", "events"},
                     where, strict);

  SentenceExample s;
  s.id = get_field(obj, "id", where).get<std::string>();
  for (const auto& t : get_field(obj, "tokens", where)) {
    s.tokens.push_back(t.get<std::string>());
  }
  if (obj.contains("pos")) {
    for (const auto& t : obj["pos"]) s.pos.push_back(t.get<std::string>());
  } else {
    s.pos = fallback_pos_tag(s.tokens);
  }
  if (obj.contains("entities")) {
    for (const auto& e : obj["entities"]) {
      check_known_fields(e, {"id", "start", "end", "type"}, where, strict);
      EntityMention m;
      m.id = get_field(e, "id", where).get<std::string>();
      m.span.start = get_index(get_field(e, "start", where), "start", where);
      m.span.end = get_index(get_field(e, "end", where), "end", where);
      m.type = get_field(e, "type", where).get<std::string>();
      s.entities.push_back(std::move(m));
    }
  }
  if (obj.contains("events")) {
    for (const auto& ev : obj["events"]) {
      check_known_fields(ev, {"type", "trigger", "arguments"}, where, strict);
      EventMention m;
      m.type = get_field(ev, "type", where).get<std::string>();
      const json& trig = get_field(ev, "trigger", where);
      check_known_fields(trig, {"start", "end"}, where, strict);
      m.trigger.start =
          get_index(get_field(trig, "start", where), "start", where);
      m.trigger.end = get_index(get_field(trig, "end", where), "end", where);
      if (ev.contains("arguments")) {
        for (const auto& a : ev["arguments"]) {
          check_known_fields(a, {"entity_id", "role"}, where, strict);
          EventArgument arg;
          arg.entity_id = get_field(a, "entity_id", where).get<std::string>();
          arg.role = get_field(a, "role", where).get<std::string>();
          m.arguments.push_back(std::move(arg));
        }
      }
      s.events.push_back(std::move(m));
    }
  }
  return s;
}

ordered_json sentence_to_json(const SentenceExample& s) {
  ordered_json obj;
  obj["id"] = s.id;
  obj["tokens"] = s.tokens;
  obj["pos"] = s.pos;
  obj["entities"] = ordered_json::array();
  for (const EntityMention& e : s.entities) {
    ordered_json je;
    je["id"] = e.id;
    je["start"] = e.span.start;
    je["end"] = e.span.end;
    je["type"] = e.type;
    obj["entities"].push_back(std::move(je));
  }
  obj["events"] = ordered_json::array();
  for (const EventMention& ev : s.events) {
    ordered_json je;
    je["type"] = ev.type;
    je["trigger"] = {{"start", ev.trigger.start}, {"end", ev.trigger.end}};
    je["arguments"] = ordered_json::array();
    for (const EventArgument& a : ev.arguments) {
      je["arguments"].push_back(
          ordered_json{{"entity_id", a.entity_id}, {"role", a.role}});
    }
    obj["events"].push_back(std::move(je));
  }
  return obj;
}

}  // namespace

const EntityMention* SentenceExample::find_entity(
    const std::string& entity_id) const {
  for (const EntityMention& e : entities) {
    if (e.id == entity_id) return &e;
  }
  return nullptr;
}

const std::vector<std::string>& pos_tagset() {
  static const std::vector<std::string> tags = {
      "ADJ",  "ADP",  "ADV",   "AUX",   "CCONJ", "CONJ",
      "DET",  "INTJ", "NOUN",  "NUM",   "PART",  "PRON",
      "PROPN", "PUNCT", "SCONJ", "SYM",  "VERB",  "X"};
  return tags;
}

std::size_t pos_tag_index(const std::string& tag) {
  const auto& tags = pos_tagset();
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i] == tag) return i;
  }
  return tags.size() - 1;  // X
}

std::vector<std::string> fallback_pos_tag(
    const std::vector<std::string>& tokens) {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    if (all_punct(tok)) {
      tags.push_back("PUNCT");
      continue;
    }
    if (numeric_like(tok)) {
      tags.push_back("NUM");
      continue;
    }
    const std::string lo = lower(tok);
    auto it = lexicon().find(lo);
    if (it != lexicon().end()) {
      tags.push_back(it->second);
      continue;
    }
    if (i > 0 && !tok.empty() && std::isupper(static_cast<unsigned char>(tok[0]))) {
      tags.push_back("PROPN");
      continue;
    }
    if (ends_with(lo, "ly")) {
      tags.push_back("ADV");
    } else if (ends_with(lo, "ed") || ends_with(lo, "ing")) {
      tags.push_back("VERB");
    } else if (ends_with(lo, "tion") || ends_with(lo, "ment") ||
               ends_with(lo, "ness") || ends_with(lo, "ity")) {
      tags.push_back("NOUN");
    } else if (ends_with(lo, "ous") || ends_with(lo, "ful") ||
               ends_with(lo, "ive") || ends_with(lo, "able") ||
               ends_with(lo, "al")) {
      tags.push_back("ADJ");
    } else {
      tags.push_back("NOUN");
    }
  }
  return tags;
}

void validate_sentence(const SentenceExample& s, const ontology::Ontology* ont,
                       const std::string& where) {
  if (s.id.empty()) bad_line(where, "sentence id must be non-empty");
  if (s.tokens.empty()) bad_line(where, "sentence has no tokens");
  if (s.pos.size() != s.tokens.size()) {
    bad_line(where, "pos length " + std::to_string(s.pos.size()) +
                        " does not match " + std::to_string(s.tokens.size()) +
                        " tokens");
  }
  auto check_span = [&](const Span& sp, const std::string& what) {
    if (sp.start >= sp.end || sp.end > s.tokens.size()) {
      bad_line(where, what + " span (" + std::to_string(sp.start) + ", " +
                          std::to_string(sp.end) + ") out of bounds for " +
                          std::to_string(s.tokens.size()) + " tokens");
    }
  };
  std::set<std::string> ids;
  for (const EntityMention& e : s.entities) {
    check_span(e.span, "entity '" + e.id + "'");
    if (!ids.insert(e.id).second) {
      bad_line(where, "duplicate entity id '" + e.id + "'");
    }
  }
  for (const EventMention& ev : s.events) {
    check_span(ev.trigger, "trigger of '" + ev.type + "'");
    const ontology::EventTypeDef* def = nullptr;
    if (ont != nullptr) {
      def = ont->find_type(ev.type);
      if (def == nullptr) bad_line(where, "unknown event type '" + ev.type + "'");
    }
    for (const EventArgument& a : ev.arguments) {
      if (ids.count(a.entity_id) == 0) {
        bad_line(where, "argument references unknown entity '" + a.entity_id +
                            "'");
      }
      if (def != nullptr &&
          std::find(def->roles.begin(), def->roles.end(), a.role) ==
              def->roles.end()) {
        bad_line(where, "unknown role '" + a.role + "' for event type '" +
                            ev.type + "'");
      }
    }
  }
}

std::vector<SentenceExample> load_corpus(const std::string& path,
                                         const ontology::Ontology* ont,
                                         bool strict) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file: " + path);
  std::vector<SentenceExample> out;
  std::set<std::string> seen_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      bad_line(where, std::string("malformed JSON: ") + e.what());
    }
    SentenceExample s = sentence_from_json(obj, where, strict);
    validate_sentence(s, ont, where);
    if (!seen_ids.insert(s.id).second) {
      bad_line(where, "duplicate sentence id '" + s.id + "'");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_corpus(const std::string& path,
                 const std::vector<SentenceExample>& sentences) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write corpus file: " + path);
  for (const SentenceExample& s : sentences) {
    out << sentence_to_json(s).dump() << "\n";
  }
  if (!out) throw RuntimeFailure("write failed: " + path);
}

}  // namespace eqex::corpus
