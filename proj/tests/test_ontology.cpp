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
#include <string>
#include <vector>

#include "doctest.h"
#include "eqex/corpus.hpp"
#include "eqex/error.hpp"
#include "eqex/ontology.hpp"

namespace {

using namespace eqex::ontology;
using eqex::ValidationError;
using eqex::corpus::SentenceExample;

SentenceExample sentence(const std::string& id,
                         std::vector<std::string> tokens) {
  SentenceExample s;
  s.id = id;
  s.tokens = std::move(tokens);
  s.pos = eqex::corpus::fallback_pos_tag(s.tokens);
  return s;
}

SentenceExample with_trigger(const std::string& id,
                             std::vector<std::string> tokens,
                             std::size_t start, std::size_t end,
                             const std::string& type = "attack") {
  SentenceExample s = sentence(id, std::move(tokens));
  s.events.push_back({type, {start, end}, {}});
  return s;
}

std::size_t count_seps(const QueryTokens& q) {
  return static_cast<std::size_t>(
      std::count(q.tokens.begin(), q.tokens.end(), std::string(kSepToken)));
}

}  // namespace

TEST_CASE("name_words lowercases and splits on separators") {
  CHECK(name_words("End-Position") ==
        std::vector<std::string>{"end", "position"});
  CHECK(name_words("transfer_ownership") ==
        std::vector<std::string>{"transfer", "ownership"});
  CHECK(name_words("Justice/Arrest Jail") ==
        std::vector<std::string>{"justice", "arrest", "jail"});
  CHECK(name_words("attack") == std::vector<std::string>{"attack"});
  CHECK(name_words("--x--") == std::vector<std::string>{"x"});
}

TEST_CASE("trigger query layout") {
  const std::vector<std::string> words = {"rebels", "attacked", "mosul"};
  const EventTypeDef type{"End-Position",
                          {"person", "entity"},
                          {"fired", "resigned"}};

  SUBCASE("with prototypes") {
    const QueryTokens q = build_trigger_query(words, type, true);
    const std::vector<std::string> expect = {
        "[CLS]", "[EVENT]", "[SEP]", "rebels",   "attacked", "mosul",
        "[SEP]", "end",     "position", "fired", "resigned", "[SEP]"};
    CHECK(q.tokens == expect);
    CHECK(q.sentence.begin == 3);
    CHECK(q.sentence.end == 6);
    CHECK(q.query.begin == 7);
    CHECK(q.query.end == 11);
    CHECK(count_seps(q) == 3);
    REQUIRE(q.segments.size() == q.tokens.size());
    // Sentence side (specials included) is segment 0; the query region and
    // its closing separator are segment 1.
    for (std::size_t i = 0; i < 7; ++i) CHECK(q.segments[i] == 0);
    for (std::size_t i = 7; i < q.tokens.size(); ++i) CHECK(q.segments[i] == 1);
  }
  SUBCASE("without prototypes only the name words remain") {
    const QueryTokens q = build_trigger_query(words, type, false);
    const std::vector<std::string> expect = {
        "[CLS]", "[EVENT]", "[SEP]", "rebels", "attacked",
        "mosul", "[SEP]",   "end",   "position", "[SEP]"};
    CHECK(q.tokens == expect);
    CHECK(q.query.begin == 7);
    CHECK(q.query.end == 9);
  }
}

TEST_CASE("argument query layout records role slots and the Other slot") {
  const std::vector<std::string> words = {"rebels", "attacked", "mosul"};
  const EventTypeDef type{"attack", {"attacker", "place-name"}, {}};
  const QueryTokens q = build_argument_query(words, type);
  const std::vector<std::string> expect = {
      "[CLS]", "rebels", "attacked", "mosul", "[SEP]",
      "attacker", "place", "name", "[SEP]"};
  CHECK(q.tokens == expect);
  CHECK(q.sentence.begin == 1);
  CHECK(q.sentence.end == 4);
  REQUIRE(q.role_slots.size() == 2);
  CHECK(q.role_slots[0].begin == 5);
  CHECK(q.role_slots[0].end == 6);
  // A multi-word role occupies a multi-token slot.
  CHECK(q.role_slots[1].begin == 6);
  CHECK(q.role_slots[1].end == 8);
  CHECK(q.query.begin == 5);
  CHECK(q.query.end == 8);
  CHECK(q.other_slot == 8);
  CHECK(q.tokens[q.other_slot] == "[SEP]");
  for (std::size_t i = 0; i < 5; ++i) CHECK(q.segments[i] == 0);
  for (std::size_t i = 5; i < q.tokens.size(); ++i) CHECK(q.segments[i] == 1);
}

TEST_CASE("plain sequence wraps the sentence only") {
  const QueryTokens q = build_plain_sequence({"a", "b"});
  CHECK(q.tokens == std::vector<std::string>{"[CLS]", "a", "b", "[SEP]"});
  CHECK(q.sentence.begin == 1);
  CHECK(q.sentence.end == 3);
  CHECK(q.role_slots.empty());
  for (int seg : q.segments) CHECK(seg == 0);
}

TEST_CASE("prototype selection ranks by trigger purity") {
  // Hand-counted candidate table for type "attack":
  //   struck       f_t=2 f_o=2 -> 1.0
  //   opened fire  f_t=1 f_o=1 -> 1.0
  //   raid         f_t=1 f_o=1 -> 1.0
  //   raided       f_t=1 f_o=1 -> 1.0
  //   attacked     f_t=2 f_o=3 -> 0.667  (one unannotated occurrence)
  // Order: score desc, then f_t desc, then lexicographic.
  const std::vector<SentenceExample> corpus = {
      with_trigger("p1", {"rebels", "struck", "the", "base"}, 1, 2),
      with_trigger("p2", {"they", "struck", "again"}, 1, 2),
      with_trigger("p3", {"troops", "opened", "fire", "on", "protesters"}, 1,
                   3),
      with_trigger("p4", {"rebels", "raided", "the", "camp"}, 1, 2),
      with_trigger("p5", {"a", "raid", "occurred"}, 1, 2),
      with_trigger("p6", {"rebels", "attacked"}, 1, 2),
      with_trigger("p7", {"They", "Attacked", "again"}, 1, 2),
      sentence("p8", {"the", "attacked", "village", "fell"}),
  };
  Ontology ont;
  ont.name = "o";
  ont.types.push_back({"attack", {"attacker"}, {}});

  const std::vector<std::string> full =
      select_prototypes(corpus, ont, "attack", 8);
  CHECK(full == std::vector<std::string>{"struck", "opened fire", "raid",
                                         "raided", "attacked"});
  // Truncation keeps the top of the same ranking.
  CHECK(select_prototypes(corpus, ont, "attack", 2) ==
        std::vector<std::string>{"struck", "opened fire"});
  CHECK_THROWS_AS(select_prototypes(corpus, ont, "party", 2), ValidationError);

  SUBCASE("select_all_prototypes fills every type in place") {
    Ontology filled = ont;
    select_all_prototypes(corpus, filled, 3);
    CHECK(filled.types[0].prototypes ==
          std::vector<std::string>{"struck", "opened fire", "raid"});
    CHECK_THROWS_AS(select_all_prototypes(corpus, filled, kMaxPrototypes + 1),
                    ValidationError);
  }
}

TEST_CASE("fingerprint is order- and content-sensitive") {
  Ontology a;
  a.name = "x";
  a.types.push_back({"attack", {"attacker", "place"}, {"raid"}});
  a.types.push_back({"meet", {"participant"}, {}});
  const std::uint64_t base = fingerprint(a);

  Ontology same = a;
  CHECK(fingerprint(same) == base);

  Ontology reordered = a;
  std::swap(reordered.types[0], reordered.types[1]);
  CHECK(fingerprint(reordered) != base);

  Ontology protos = a;
  protos.types[0].prototypes = {"strike"};
  CHECK(fingerprint(protos) != base);

  Ontology renamed = a;
  renamed.types[1].name = "meeting";
  CHECK(fingerprint(renamed) != base);
}

TEST_CASE("ontology round-trips through a file") {
  Ontology ont;
  ont.name = "ace-lite";
  ont.types.push_back({"attack", {"attacker", "place"}, {"raid", "war"}});
  ont.types.push_back({"elect", {"person"}, {}});
  const std::string path = "scratch_ontology.json";
  save_ontology(path, ont);
  const Ontology loaded = load_ontology(path);
  CHECK(loaded == ont);
  std::remove(path.c_str());
}

TEST_CASE("loading rejects malformed definitions") {
  auto load_text = [](const std::string& name, const std::string& text) {
    const std::string path = "scratch_" + name + ".json";
    std::ofstream(path) << text;
    Ontology ont;
    try {
      ont = load_ontology(path);
    } catch (...) {
      std::remove(path.c_str());
      throw;
    }
    std::remove(path.c_str());
    return ont;
  };
  CHECK_THROWS_AS(load_text("dup",
                            R"({"name":"o","types":[
        {"name":"a","roles":["r"]},{"name":"a","roles":["r"]}]})"),
                  ValidationError);
  CHECK_THROWS_AS(load_text("noroles",
                            R"({"name":"o","types":[{"name":"a","roles":[]}]})"),
                  ValidationError);
  CHECK_THROWS_AS(load_text("duprole",
                            R"({"name":"o","types":[
        {"name":"a","roles":["r","r"]}]})"),
                  ValidationError);
  CHECK_THROWS_AS(
      load_text("toomany",
                R"({"name":"o","types":[{"name":"a","roles":["r"],
        "prototypes":["1","2","3","4","5","6","7","8","9"]}]})"),
      ValidationError);
  CHECK_THROWS_AS(load_text("nokeys", R"({"name":"o"})"), ValidationError);
}

TEST_CASE("merging unions types and drops prototypes") {
  Ontology a;
  a.name = "left";
  a.types.push_back({"attack", {"attacker", "place"}, {"raid"}});
  a.types.push_back({"meet", {"participant", "place"}, {"summit"}});
  Ontology b;
  b.name = "right";
  b.types.push_back({"attack", {"attacker", "place"}, {"strike"}});
  b.types.push_back({"elect", {"person"}, {}});

  const Ontology merged = merge_ontologies(a, b);
  CHECK(merged.name == "left+right");
  REQUIRE(merged.types.size() == 3);
  CHECK(merged.types[0].name == "attack");
  CHECK(merged.types[1].name == "meet");
  CHECK(merged.types[2].name == "elect");
  CHECK(merged.types[0].roles == std::vector<std::string>{"attacker", "place"});
  for (const EventTypeDef& t : merged.types) CHECK(t.prototypes.empty());

  // Shared names whose role lists disagree cannot be merged; role-slot order
  // is part of the model contract.
  Ontology conflict;
  conflict.name = "bad";
  conflict.types.push_back({"attack", {"attacker", "target"}, {}});
  CHECK_THROWS_AS(merge_ontologies(a, conflict), ValidationError);

  // A shared type yields byte-identical trigger queries from either side.
  const std::vector<std::string> words = {"rebels", "attacked"};
  const QueryTokens qa =
      build_trigger_query(words, *a.find_type("attack"), false);
  const QueryTokens qm =
      build_trigger_query(words, *merged.find_type("attack"), false);
  CHECK(qa.tokens == qm.tokens);
  CHECK(qa.segments == qm.segments);
}
