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
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "eqex/corpus.hpp"
#include "eqex/error.hpp"
#include "eqex/ontology.hpp"

namespace {

using eqex::ValidationError;
using namespace eqex::corpus;

// Writes `text` to a scratch file and returns its path.
std::string scratch(const std::string& name, const std::string& text) {
  const std::string path = "scratch_" + name;
  std::ofstream out(path);
  out << text;
  return path;
}

SentenceExample simple_sentence() {
  SentenceExample s;
  s.id = "s1";
  s.tokens = {"the", "army", "raided", "mosul", "."};
  s.pos = {"DET", "NOUN", "VERB", "PROPN", "PUNCT"};
  s.entities = {{"e0", {1, 2}, "org"}, {"e1", {3, 4}, "loc"}};
  s.events = {{"attack", {2, 3}, {{"e0", "attacker"}, {"e1", "place"}}}};
  return s;
}

eqex::ontology::Ontology attack_ontology() {
  eqex::ontology::Ontology ont;
  ont.name = "t";
  ont.types.push_back({"attack", {"attacker", "place"}, {}});
  return ont;
}

}  // namespace

TEST_CASE("pos tagset is the fixed 18-tag inventory") {
  const auto& tags = pos_tagset();
  CHECK(tags.size() == 18);
  // Alphabetical, so lookups can binary-search if they ever need to.
  for (std::size_t i = 1; i < tags.size(); ++i) CHECK(tags[i - 1] < tags[i]);
  CHECK(pos_tag_index("NOUN") == 8);
  CHECK(tags[pos_tag_index("VERB")] == "VERB");
  // Unknown tags collapse onto the catch-all class.
  CHECK(tags[pos_tag_index("WHATEVER")] == "X");
}

TEST_CASE("fallback tagger applies its rules in order") {
  const std::vector<std::string> tokens = {
      "The", "army", "walked", "to",      "Mosul",
      "in",  "2008", ",",      "quickly", "speaking"};
  const auto tags = fallback_pos_tag(tokens);
  CHECK(tags[0] == "DET");     // closed class, case-insensitive
  CHECK(tags[1] == "NOUN");    // open-class default
  CHECK(tags[2] == "VERB");    // -ed suffix
  CHECK(tags[3] == "ADP");
  CHECK(tags[4] == "PROPN");   // capitalized, not sentence-initial
  CHECK(tags[5] == "ADP");
  CHECK(tags[6] == "NUM");
  CHECK(tags[7] == "PUNCT");
  CHECK(tags[8] == "ADV");     // -ly suffix
  CHECK(tags[9] == "VERB");    // -ing suffix

  // A capitalized sentence opener is not treated as a proper noun; it falls
  // through to the suffix rules instead.
  CHECK(fallback_pos_tag({"Useful"})[0] == "ADJ");
  CHECK(fallback_pos_tag({"Army"})[0] == "NOUN");
}

TEST_CASE("corpus round-trips through JSONL unchanged") {
  std::vector<SentenceExample> sentences = {simple_sentence()};
  SentenceExample bare;
  bare.id = "s2";
  bare.tokens = {"nothing", "happened", "."};
  bare.pos = fallback_pos_tag(bare.tokens);
  sentences.push_back(bare);

  const std::string path = "scratch_roundtrip.jsonl";
  save_corpus(path, sentences);
  const auto ont = attack_ontology();
  const auto loaded = load_corpus(path, &ont);
  REQUIRE(loaded.size() == sentences.size());
  CHECK(loaded[0] == sentences[0]);
  CHECK(loaded[1] == sentences[1]);
  std::remove(path.c_str());
}

TEST_CASE("loader reports the offending line") {
  const std::string path = scratch(
      "badline.jsonl",
      R"({"id":"a","tokens":["x"],"pos":["NOUN"]})" "\n" R"({"id":"b")" "\n");
  try {
    load_corpus(path, nullptr);
    FAIL("expected a parse error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find(path + ":2") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("loader validates spans, ids, and references") {
  const auto ont = attack_ontology();

  SUBCASE("entity span out of range") {
    const std::string path = scratch(
        "spans.jsonl",
        R"({"id":"a","tokens":["x","y"],"pos":["NOUN","NOUN"],"entities":[{"id":"e0","start":1,"end":3,"type":"org"}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path, &ont), ValidationError);
    std::remove(path.c_str());
  }
  SUBCASE("duplicate entity id") {
    const std::string path = scratch(
        "dupid.jsonl",
        R"({"id":"a","tokens":["x","y"],"pos":["NOUN","NOUN"],"entities":[{"id":"e0","start":0,"end":1,"type":"org"},{"id":"e0","start":1,"end":2,"type":"loc"}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path, &ont), ValidationError);
    std::remove(path.c_str());
  }
  SUBCASE("argument referencing a missing entity") {
    const std::string path = scratch(
        "orphan.jsonl",
        R"({"id":"a","tokens":["x","y"],"pos":["NOUN","NOUN"],"events":[{"type":"attack","trigger":{"start":0,"end":1},"arguments":[{"entity_id":"ghost","role":"attacker"}]}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path, &ont), ValidationError);
    std::remove(path.c_str());
  }
  SUBCASE("event type unknown to the ontology") {
    const std::string path = scratch(
        "unktype.jsonl",
        R"({"id":"a","tokens":["x"],"pos":["NOUN"],"events":[{"type":"party","trigger":{"start":0,"end":1},"arguments":[]}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path, &ont), ValidationError);
    // Without an ontology the same line is accepted.
    CHECK(load_corpus(path, nullptr).size() == 1);
    std::remove(path.c_str());
  }
  SUBCASE("role unknown to the event type") {
    const std::string path = scratch(
        "unkrole.jsonl",
        R"({"id":"a","tokens":["x","y"],"pos":["NOUN","NOUN"],"entities":[{"id":"e0","start":0,"end":1,"type":"org"}],"events":[{"type":"attack","trigger":{"start":1,"end":2},"arguments":[{"entity_id":"e0","role":"driver"}]}]})" "\n");
    CHECK_THROWS_AS(load_corpus(path, &ont), ValidationError);
    std::remove(path.c_str());
  }
  SUBCASE("pos column must align with tokens") {
    const std::string path = scratch(
        "poslen.jsonl",
        R"({"id":"a","tokens":["x","y"],"pos":["NOUN"]})" "\n");
    CHECK_THROWS_AS(load_corpus(path, &ont), ValidationError);
    std::remove(path.c_str());
  }
}

TEST_CASE("missing pos column is filled by the fallback tagger") {
  const std::string path = scratch(
      "nopos.jsonl", R"({"id":"a","tokens":["The","army","arrived","."]})" "\n");
  const auto loaded = load_corpus(path, nullptr);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].pos == fallback_pos_tag(loaded[0].tokens));
  std::remove(path.c_str());
}

TEST_CASE("unknown fields are strict errors and lenient warnings") {
  const std::string path = scratch(
      "unkfield.jsonl",
      R"({"id":"a","tokens":["x"],"pos":["NOUN"],"color":"red"})" "\n");
  CHECK_THROWS_AS(load_corpus(path, nullptr, /*strict=*/true),
                  ValidationError);
  CHECK(load_corpus(path, nullptr, /*strict=*/false).size() == 1);
  std::remove(path.c_str());
}

TEST_CASE("duplicate sentence ids are rejected") {
  const std::string line = R"({"id":"a","tokens":["x"],"pos":["NOUN"]})";
  const std::string path = scratch("dupsent.jsonl", line + "\n" + line + "\n");
  CHECK_THROWS_AS(load_corpus(path, nullptr), ValidationError);
  std::remove(path.c_str());
}

TEST_CASE("find_entity resolves ids") {
  const SentenceExample s = simple_sentence();
  REQUIRE(s.find_entity("e1") != nullptr);
  CHECK(s.find_entity("e1")->type == "loc");
  CHECK(s.find_entity("nope") == nullptr);
}
