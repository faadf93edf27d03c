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

#include "eqex/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>

#include "eqex/error.hpp"

namespace eqex::vocab {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

}  // namespace

const std::vector<std::string>& special_tokens() {
  static const std::vector<std::string> specials = {"[PAD]", "[UNK]", "[CLS]",
                                                    "[SEP]", "[EVENT]"};
  return specials;
}

Vocab Vocab::build(
    const std::vector<const std::vector<corpus::SentenceExample>*>& corpora,
    const std::vector<const ontology::Ontology*>& ontologies,
    std::size_t min_freq) {
  std::map<std::string, std::size_t> freq;
  for (const auto* sentences : corpora) {
    for (const corpus::SentenceExample& s : *sentences) {
      for (const std::string& t : s.tokens) ++freq[lower(t)];
    }
  }
  std::set<std::string> included;
  for (const auto& [word, count] : freq) {
    if (count >= min_freq) included.insert(word);
  }
  for (const auto* ont : ontologies) {
    for (const ontology::EventTypeDef& t : ont->types) {
      for (const std::string& w : ontology::name_words(t.name)) {
        included.insert(w);
      }
      for (const std::string& r : t.roles) {
        for (const std::string& w : ontology::name_words(r)) {
          included.insert(w);
        }
      }
      for (const std::string& p : t.prototypes) {
        for (const std::string& w : ontology::name_words(p)) {
          included.insert(w);
        }
      }
    }
  }
  std::vector<std::string> tokens = special_tokens();
  tokens.insert(tokens.end(), included.begin(), included.end());
  return from_tokens(std::move(tokens));
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  const auto& specials = special_tokens();
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    throw ValidationError(
        "vocabulary must start with the special tokens "
        "[PAD] [UNK] [CLS] [SEP] [EVENT]");
  }
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw ValidationError("duplicate vocabulary token '" + v.tokens_[i] +
                            "'");
    }
  }
  return v;
}

Vocab Vocab::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vocabulary file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

void Vocab::to_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write vocabulary file: " + path);
  for (const std::string& t : tokens_) out << t << "\n";
  if (!out) throw RuntimeFailure("write failed: " + path);
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  it = index_.find(lower(token));
  return it != index_.end() ? it->second : kUnkId;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id(t));
  return ids;
}

const std::string& Vocab::token(int token_id) const {
  if (token_id < 0 || static_cast<std::size_t>(token_id) >= tokens_.size()) {
    throw RuntimeFailure("vocabulary id out of range: " +
                         std::to_string(token_id));
  }
  return tokens_[static_cast<std::size_t>(token_id)];
}

}  // namespace eqex::vocab
