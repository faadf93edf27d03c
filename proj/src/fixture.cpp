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

#include "eqex/fixture.hpp"

#include <sstream>

#include "eqex/rng.hpp"

namespace eqex::fixture {
namespace {

using corpus::EntityMention;
using corpus::EventArgument;
using corpus::EventMention;
using corpus::SentenceExample;

// Incrementally assembles one sentence; spans are recorded as words are
// appended so indices never drift from the token list.
class Builder {
 public:
  explicit Builder(std::string id) { s_.id = std::move(id); }

  void word(const std::string& w) { s_.tokens.push_back(w); }

  void words(const std::vector<std::string>& ws) {
    for (const auto& w : ws) s_.tokens.push_back(w);
  }

  // Appends the words as tokens and registers them as one entity mention.
  std::string entity(const std::vector<std::string>& ws,
                     const std::string& type) {
    EntityMention e;
    e.id = "e" + std::to_string(s_.entities.size());
    e.span.start = s_.tokens.size();
    words(ws);
    e.span.end = s_.tokens.size();
    e.type = type;
    s_.entities.push_back(e);
    return s_.entities.back().id;
  }

  // Appends the trigger word and returns its single-token span.
  corpus::Span trigger(const std::string& w) {
    const std::size_t at = s_.tokens.size();
    word(w);
    return corpus::Span{at, at + 1};
  }

  void event(const std::string& type, corpus::Span trigger_span,
             std::vector<EventArgument> args) {
    EventMention ev;
    ev.type = type;
    ev.trigger = trigger_span;
    ev.arguments = std::move(args);
    s_.events.push_back(std::move(ev));
  }

  SentenceExample finish() {
    s_.pos = corpus::fallback_pos_tag(s_.tokens);
    return std::move(s_);
  }

 private:
  SentenceExample s_;
};

std::string sentence_id(std::size_t n) {
  std::ostringstream out;
  out << "s" << (n < 10 ? "0" : "") << n;
  return out.str();
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
  return pool[static_cast<std::size_t>(rng.uniform_int(pool.size()))];
}

std::string pick_word(Rng& rng, const std::vector<std::string>& pool) {
  return pool[static_cast<std::size_t>(rng.uniform_int(pool.size()))];
}

const std::vector<std::vector<std::string>> kPersons = {
    {"soldiers"},        {"rebels"},      {"police"},
    {"workers"},         {"students"},    {"rebel", "forces"},
    {"armed", "men"},    {"farmers"},     {"officials"},
};
const std::vector<std::vector<std::string>> kOrgs = {
    {"company"}, {"ministry"}, {"council"}, {"army"}};
const std::vector<std::vector<std::string>> kPlaces = {
    {"baghdad"}, {"paris"}, {"mosul"},  {"tokyo"},
    {"village"}, {"capital"}, {"harbor"}, {"airport"}};
const std::vector<std::vector<std::string>> kItems = {
    {"weapons"}, {"supplies"}, {"goods"}, {"cargo"}};

struct TypeSpec {
  std::string name;
  std::vector<std::string> roles;
  std::vector<std::string> triggers;
};

// Eight distinct role names across the five types. The argument scorer is
// additive over entity-side and role-side features, so one event's positive
// cells are exactly decodable only when they avoid opposing constraints:
// every event below either keeps all its mentions on a single role column,
// or has no argument at all (all mentions on the no-role column). Mixing
// role-filling and role-free mentions in one event would demand an entity
// ordering the role column and the no-role column cannot both satisfy.
const std::vector<TypeSpec> kOverfitTypes = {
    {"attack", {"attacker", "target"}, {"attacked", "raided", "bombed", "struck"}},
    {"meet", {"participant", "place"}, {"met", "spoke", "gathered"}},
    {"transport", {"artifact", "destination"}, {"shipped", "moved", "carried", "delivered"}},
    {"marry", {"person"}, {"married", "wed"}},
    {"hire", {"agent", "person"}, {"recruited", "hired"}},
};

SentenceExample make_event_sentence(const std::string& id,
                                    const TypeSpec& type, bool alt, Rng& rng) {
  Builder b(id);
  if (type.name == "attack") {
    if (!alt) {
      b.word("the");
      const std::string a = b.entity(pick(rng, kPersons), "per");
      const corpus::Span t = b.trigger(pick_word(rng, {"attacked", "raided"}));
      b.words({"on", "friday", "."});
      b.event("attack", t, {{a, "attacker"}});
    } else {
      b.word("the");
      const std::string v = b.entity(pick(rng, kPlaces), "loc");
      b.word("was");
      const corpus::Span t = b.trigger(pick_word(rng, {"bombed", "struck"}));
      b.words({"at", "dawn", "."});
      b.event("attack", t, {{v, "target"}});
    }
  } else if (type.name == "meet") {
    if (!alt) {
      b.word("the");
      const std::string a = b.entity(pick(rng, kPersons), "per");
      const corpus::Span t = b.trigger(pick_word(rng, {"met", "spoke"}));
      b.words({"with", "the"});
      const std::string c = b.entity(pick(rng, kPersons), "per");
      b.words({"on", "monday", "."});
      // Two mentions share the participant role in one event.
      b.event("meet", t, {{a, "participant"}, {c, "participant"}});
    } else {
      b.words({"the", "summit"});
      const corpus::Span t = b.trigger("gathered");
      b.words({"in", "the"});
      const std::string l = b.entity(pick(rng, kPlaces), "loc");
      b.words({"yesterday", "."});
      b.event("meet", t, {{l, "place"}});
    }
  } else if (type.name == "transport") {
    if (!alt) {
      b.word("the");
      const std::string it = b.entity(pick(rng, kItems), "item");
      b.word("was");
      const corpus::Span t = b.trigger(pick_word(rng, {"shipped", "moved"}));
      b.words({"overnight", "."});
      b.event("transport", t, {{it, "artifact"}});
    } else {
      b.words({"the", "crew"});
      const corpus::Span t = b.trigger(pick_word(rng, {"carried", "delivered"}));
      b.words({"the", "boxes", "to", "the"});
      const std::string l = b.entity(pick(rng, kPlaces), "loc");
      b.word(".");
      b.event("transport", t, {{l, "destination"}});
    }
  } else if (type.name == "marry") {
    if (!alt) {
      b.word("the");
      const std::string a = b.entity(pick(rng, kPersons), "per");
      b.words({"and", "the"});
      const std::string c = b.entity(pick(rng, kPersons), "per");
      const corpus::Span t = b.trigger(pick_word(rng, {"married", "wed"}));
      b.words({"on", "sunday", "."});
      b.event("marry", t, {{a, "person"}, {c, "person"}});
    } else {
      // An event with a mention filling none of its roles: marry defines no
      // place role, so the location sits on the no-role column alone.
      b.words({"the", "couple"});
      const corpus::Span t = b.trigger(pick_word(rng, {"married", "wed"}));
      b.words({"near", "the"});
      b.entity(pick(rng, kPlaces), "loc");
      b.word(".");
      b.event("marry", t, {});
    }
  } else {  // hire
    if (!alt) {
      b.word("the");
      const std::string a = b.entity(pick(rng, kOrgs), "org");
      const corpus::Span t = b.trigger("recruited");
      b.words({"last", "spring", "."});
      b.event("hire", t, {{a, "agent"}});
    } else {
      b.word("the");
      const std::string p = b.entity(pick(rng, kPersons), "per");
      b.word("was");
      const corpus::Span t = b.trigger("hired");
      b.words({"last", "month", "."});
      b.event("hire", t, {{p, "person"}});
    }
  }
  return b.finish();
}

SentenceExample make_negative_sentence(const std::string& id, Rng& rng,
                                       bool with_entities) {
  Builder b(id);
  const int variant = static_cast<int>(rng.uniform_int(3));
  if (!with_entities) {
    if (variant == 0) {
      b.words({"it", "rained", "for", "hours", "yesterday", "."});
    } else if (variant == 1) {
      b.words({"prices", "stayed", "flat", "all", "week", "."});
    } else {
      b.words({"the", "weather", "was", "calm", "today", "."});
    }
    return b.finish();
  }
  if (variant == 0) {
    b.word("the");
    b.entity(pick(rng, kPersons), "per");
    b.words({"walked", "to", "the"});
    b.entity(pick(rng, kPlaces), "loc");
    b.word(".");
  } else if (variant == 1) {
    b.word("the");
    b.entity(pick(rng, kOrgs), "org");
    b.words({"announced", "a", "plan", "in"});
    b.entity(pick(rng, kPlaces), "loc");
    b.word(".");
  } else {
    b.word("the");
    b.entity(pick(rng, kPersons), "per");
    b.words({"counted", "the"});
    b.entity(pick(rng, kItems), "item");
    b.words({"at", "the"});
    b.entity(pick(rng, kPlaces), "loc");
    b.word(".");
  }
  return b.finish();
}

}  // namespace

Fixture make_overfit_fixture(std::uint64_t seed) {
  Rng rng(seed);
  Fixture f;
  f.ontology.name = "overfit";
  for (const auto& t : kOverfitTypes) {
    ontology::EventTypeDef def;
    def.name = t.name;
    def.roles = t.roles;
    f.ontology.types.push_back(std::move(def));
  }
  f.entity_types = {"item", "loc", "org", "per"};

  std::size_t n = 0;
  for (const auto& type : kOverfitTypes) {
    for (int i = 0; i < 8; ++i) {
      f.sentences.push_back(
          make_event_sentence(sentence_id(n++), type, i % 2 == 1, rng));
    }
  }
  for (int i = 0; i < 10; ++i) {
    f.sentences.push_back(
        make_negative_sentence(sentence_id(n++), rng, i % 2 == 0));
  }
  return f;
}

Fixture make_zeroshot_fixture(std::uint64_t seed) {
  Rng rng(seed);
  // The first three types are the conventional seen split; the other three
  // are held out. Every trigger token is the type name itself, so a model
  // that matches sentence tokens against the query's type-name token can
  // find triggers for types it never trained on.
  const std::vector<std::string> types = {"attack", "meet",    "transport",
                                          "arrest", "protest", "elect"};
  // Single-token mentions and fixed templates keep every sentence exactly
  // nine tokens long. The type-name slot of the query then sits at one
  // fixed position for all types, so whatever the classifier learns to read
  // from that slot on seen types applies unchanged to held-out ones.
  const std::vector<std::vector<std::string>> persons = {
      {"soldiers"}, {"rebels"},  {"police"},   {"workers"},
      {"students"}, {"farmers"}, {"officials"}};
  const std::vector<std::vector<std::string>> places = {
      {"baghdad"}, {"paris"},   {"mosul"},  {"tokyo"},
      {"village"}, {"capital"}, {"harbor"}, {"airport"}};

  Fixture f;
  f.ontology.name = "zeroshot";
  for (const auto& name : types) {
    ontology::EventTypeDef def;
    def.name = name;
    def.roles = {"participant", "place"};
    f.ontology.types.push_back(std::move(def));
  }
  f.entity_types = {"loc", "org", "per"};

  std::size_t n = 0;
  // Single-event sentences in two shapes, so the trigger slot is not one
  // fixed position: "the <per> <type> again near the old <loc> ." and
  // "some angry <per> <type> near the old <loc> .".
  for (const auto& type : types) {
    for (int i = 0; i < 10; ++i) {
      Builder b(sentence_id(n++));
      corpus::Span t;
      std::string a;
      if (i % 2 == 0) {
        b.word("the");
        a = b.entity(pick(rng, persons), "per");
        t = b.trigger(type);
        b.words({"again", "near", "the", "old"});
      } else {
        b.words({"some", "angry"});
        a = b.entity(pick(rng, persons), "per");
        t = b.trigger(type);
        b.words({"near", "the", "old"});
      }
      b.entity(pick(rng, places), "loc");  // fills no role
      b.word(".");
      b.event(type, t, {{a, "participant"}});
      f.sentences.push_back(b.finish());
    }
  }
  // Two-event sentences: "the <per> <t1> and <t2> at the <loc> .". Both
  // trigger slots are used by every type, so token position alone cannot
  // tell which query each trigger answers; only the match between the
  // sentence token and the query's type name can. Pairs stay within the
  // seen triple or within the held-out triple: a pair across the split
  // would leave a half-labeled sentence in the training set, where the
  // unlabeled trigger word trains as a hard negative and suppresses the
  // very token the held-out query must later find.
  for (int base : {0, 3}) {
    for (int off = 0; off < 3; ++off) {
      const std::string& t1 = types[base + off];
      const std::string& t2 = types[base + (off + 1) % 3];
      for (int i = 0; i < 5; ++i) {
        Builder b(sentence_id(n++));
        b.word("the");
        const std::string a = b.entity(pick(rng, persons), "per");
        const corpus::Span s1 = b.trigger(i % 2 == 0 ? t1 : t2);
        b.word("and");
        const corpus::Span s2 = b.trigger(i % 2 == 0 ? t2 : t1);
        b.words({"at", "the"});
        b.entity(pick(rng, places), "loc");  // fills no role
        b.word(".");
        b.event(i % 2 == 0 ? t1 : t2, s1, {{a, "participant"}});
        b.event(i % 2 == 0 ? t2 : t1, s2, {{a, "participant"}});
        f.sentences.push_back(b.finish());
      }
    }
  }
  // Event-free sentences, same nine-token shape.
  for (int i = 0; i < 6; ++i) {
    Builder b(sentence_id(n++));
    if (i % 2 == 0) {
      b.word("the");
      b.entity(pick(rng, persons), "per");
      b.words({"walked", "slowly", "to", "the", "old"});
      b.entity(pick(rng, places), "loc");
      b.word(".");
    } else {
      b.word("the");
      b.entity(pick(rng, kOrgs), "org");
      b.words({"opened", "an", "office", "near", "the"});
      b.entity(pick(rng, places), "loc");
      b.word(".");
    }
    f.sentences.push_back(b.finish());
  }
  return f;
}

std::vector<std::string> zeroshot_seen_types() {
  return {"attack", "meet", "transport"};
}

}  // namespace eqex::fixture
