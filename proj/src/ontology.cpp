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

#include "eqex/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "eqex/error.hpp"
#include "json.hpp"

namespace eqex::ontology {

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

void validate(const Ontology& ont) {
  std::set<std::string> names;
  for (const EventTypeDef& t : ont.types) {
    if (t.name.empty()) throw ValidationError("ontology: empty type name");
    if (!names.insert(t.name).second) {
      throw ValidationError("ontology: duplicate type name '" + t.name + "'");
    }
    if (t.roles.empty()) {
      throw ValidationError("ontology: type '" + t.name + "' has no roles");
    }
    std::set<std::string> roles;
    for (const std::string& r : t.roles) {
      if (!roles.insert(r).second) {
        throw ValidationError("ontology: duplicate role '" + r +
                              "' in type '" + t.name + "'");
      }
    }
    if (t.prototypes.size() > kMaxPrototypes) {
      throw ValidationError("ontology: type '" + t.name + "' has " +
                            std::to_string(t.prototypes.size()) +
                            " prototypes (limit " +
                            std::to_string(kMaxPrototypes) + ")");
    }
  }
}

void append_words(std::vector<std::string>& out, const std::string& name) {
  for (const std::string& w : name_words(name)) out.push_back(w);
}

}  // namespace

const EventTypeDef* Ontology::find_type(const std::string& type_name) const {
  for (const EventTypeDef& t : types) {
    if (t.name == type_name) return &t;
  }
  return nullptr;
}

std::vector<std::string> name_words(const std::string& name) {
  std::vector<std::string> words;
  std::string cur;
  for (char c : lower(name)) {
    if (c == '-' || c == '_' || c == '/' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) words.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  return words;
}

QueryTokens build_trigger_query(const std::vector<std::string>& tokens,
                                const EventTypeDef& type_def,
                                bool use_prototypes) {
  QueryTokens q;
  q.tokens = {kClsToken, kEventToken, kSepToken};
  for (const std::string& w : tokens) q.tokens.push_back(w);
  q.tokens.push_back(kSepToken);
  q.sentence = {3, 3 + tokens.size()};

  std::vector<std::string> qwords;
  append_words(qwords, type_def.name);
  if (use_prototypes) {
    for (const std::string& p : type_def.prototypes) append_words(qwords, p);
  }
  q.query.begin = q.tokens.size();
  for (std::string& w : qwords) q.tokens.push_back(std::move(w));
  q.query.end = q.tokens.size();
  q.tokens.push_back(kSepToken);

  q.segments.assign(q.tokens.size(), 0);
  for (std::size_t i = q.query.begin; i < q.tokens.size(); ++i) {
    q.segments[i] = 1;
  }
  return q;
}

QueryTokens build_argument_query(const std::vector<std::string>& tokens,
                                 const EventTypeDef& type_def) {
  QueryTokens q;
  q.tokens = {kClsToken};
  for (const std::string& w : tokens) q.tokens.push_back(w);
  q.tokens.push_back(kSepToken);
  q.sentence = {1, 1 + tokens.size()};

  q.query.begin = q.tokens.size();
  for (const std::string& role : type_def.roles) {
    TokenRange slot;
    slot.begin = q.tokens.size();
    append_words(q.tokens, role);
    slot.end = q.tokens.size();
    q.role_slots.push_back(slot);
  }
  q.query.end = q.tokens.size();
  q.other_slot = q.tokens.size();
  q.tokens.push_back(kSepToken);

  q.segments.assign(q.tokens.size(), 0);
  for (std::size_t i = q.query.begin; i < q.tokens.size(); ++i) {
    q.segments[i] = 1;
  }
  return q;
}

QueryTokens build_plain_sequence(const std::vector<std::string>& tokens) {
  QueryTokens q;
  q.tokens = {kClsToken};
  for (const std::string& w : tokens) q.tokens.push_back(w);
  q.tokens.push_back(kSepToken);
  q.sentence = {1, 1 + tokens.size()};
  q.segments.assign(q.tokens.size(), 0);
  return q;
}

std::vector<std::string> select_prototypes(
    const std::vector<corpus::SentenceExample>& corpus, const Ontology& ont,
    const std::string& event_type, std::size_t k) {
  if (ont.find_type(event_type) == nullptr) {
    throw ValidationError("select_prototypes: unknown event type '" +
                          event_type + "'");
  }
  // f_t: occurrences annotated as a trigger of this type, keyed by the
  // lowercased space-joined surface form of the trigger span.
  std::map<std::string, std::size_t> trigger_count;
  for (const corpus::SentenceExample& s : corpus) {
    for (const corpus::EventMention& ev : s.events) {
      if (ev.type != event_type) continue;
      std::string text;
      for (std::size_t i = ev.trigger.start; i < ev.trigger.end; ++i) {
        if (!text.empty()) text += ' ';
        text += lower(s.tokens[i]);
      }
      ++trigger_count[text];
    }
  }

  // f_o: every occurrence of the same word sequence anywhere in the corpus.
  std::map<std::string, std::size_t> corpus_count;
  for (const auto& [text, unused] : trigger_count) corpus_count[text] = 0;
  for (const corpus::SentenceExample& s : corpus) {
    std::vector<std::string> low;
    low.reserve(s.tokens.size());
    for (const std::string& t : s.tokens) low.push_back(lower(t));
    for (auto& [text, count] : corpus_count) {
      std::istringstream iss(text);
      std::vector<std::string> words;
      std::string w;
      while (iss >> w) words.push_back(w);
      if (words.empty() || words.size() > low.size()) continue;
      for (std::size_t i = 0; i + words.size() <= low.size(); ++i) {
        if (std::equal(words.begin(), words.end(), low.begin() + i)) ++count;
      }
    }
  }

  struct Candidate {
    std::string text;
    double score;
    std::size_t f_t;
  };
  std::vector<Candidate> cands;
  for (const auto& [text, f_t] : trigger_count) {
    const std::size_t f_o = std::max<std::size_t>(corpus_count[text], 1);
    cands.push_back({text, static_cast<double>(f_t) / static_cast<double>(f_o),
                     f_t});
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a,
                                           const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.f_t != b.f_t) return a.f_t > b.f_t;
    return a.text < b.text;
  });
  if (cands.size() > k) cands.resize(k);
  std::vector<std::string> out;
  out.reserve(cands.size());
  for (Candidate& c : cands) out.push_back(std::move(c.text));
  return out;
}

void select_all_prototypes(const std::vector<corpus::SentenceExample>& corpus,
                           Ontology& ont, std::size_t k) {
  if (k > kMaxPrototypes) {
    throw ValidationError("prototype count " + std::to_string(k) +
                          " exceeds limit " + std::to_string(kMaxPrototypes));
  }
  for (EventTypeDef& t : ont.types) {
    t.prototypes = select_prototypes(corpus, ont, t.name, k);
  }
}

std::uint64_t fingerprint(const Ontology& ont) {
  // FNV-1a over an order-sensitive canonical rendering.
  std::uint64_t h = 14695981039346656037ull;
  auto mix = [&h](const std::string& s, char tag) {
    h = (h ^ static_cast<unsigned char>(tag)) * 1099511628211ull;
    for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  };
  mix(ont.name, 'O');
  for (const EventTypeDef& t : ont.types) {
    mix(t.name, 'T');
    for (const std::string& r : t.roles) mix(r, 'R');
    for (const std::string& p : t.prototypes) mix(p, 'P');
  }
  return h;
}

Ontology load_ontology(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open ontology file: " + path);
  json obj;
  try {
    in >> obj;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
  Ontology ont;
  if (!obj.is_object() || !obj.contains("name") || !obj.contains("types")) {
    throw ValidationError(path + ": ontology needs 'name' and 'types'");
  }
  ont.name = obj["name"].get<std::string>();
  for (const auto& jt : obj["types"]) {
    EventTypeDef t;
    if (!jt.contains("name") || !jt.contains("roles")) {
      throw ValidationError(path + ": each type needs 'name' and 'roles'");
    }
    t.name = jt["name"].get<std::string>();
    for (const auto& r : jt["roles"]) t.roles.push_back(r.get<std::string>());
    if (jt.contains("prototypes")) {
      for (const auto& p : jt["prototypes"]) {
        t.prototypes.push_back(p.get<std::string>());
      }
    }
    ont.types.push_back(std::move(t));
  }
  validate(ont);
  return ont;
}

void save_ontology(const std::string& path, const Ontology& ont) {
  validate(ont);
  ordered_json obj;
  obj["name"] = ont.name;
  obj["types"] = ordered_json::array();
  for (const EventTypeDef& t : ont.types) {
    ordered_json jt;
    jt["name"] = t.name;
    jt["roles"] = t.roles;
    jt["prototypes"] = t.prototypes;
    obj["types"].push_back(std::move(jt));
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write ontology file: " + path);
  out << obj.dump(2) << "\n";
  if (!out) throw RuntimeFailure("write failed: " + path);
}

Ontology merge_ontologies(const Ontology& a, const Ontology& b) {
  Ontology merged;
  merged.name = a.name + "+" + b.name;
  merged.types = a.types;
  for (const EventTypeDef& t : b.types) {
    EventTypeDef* existing = nullptr;
    for (EventTypeDef& m : merged.types) {
      if (m.name == t.name) existing = &m;
    }
    if (existing == nullptr) {
      merged.types.push_back(t);
      continue;
    }
    if (existing->roles != t.roles) {
      throw ValidationError("merge: type '" + t.name +
                            "' has conflicting role lists");
    }
  }
  // Prototype lists are corpus-dependent; drop them so the merged corpus can
  // re-select a single list per type.
  for (EventTypeDef& t : merged.types) t.prototypes.clear();
  validate(merged);
  return merged;
}

}  // namespace eqex::ontology
