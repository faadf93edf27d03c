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

#pragma once

#include <map>
#include <string>
#include <vector>

#include "eqex/corpus.hpp"
#include "eqex/ontology.hpp"

namespace eqex::vocab {

// Fixed ids of the special tokens; they always occupy the first five slots.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kEventId = 4;

const std::vector<std::string>& special_tokens();

// Word-level lowercased vocabulary. Ids are stable: specials first in fixed
// order, then words sorted lexicographically.
class Vocab {
 public:
  Vocab() = default;

  // Words meeting the frequency floor across all corpora, plus every word
  // derived from the ontologies (type names, roles, prototypes), which are
  // always included regardless of the floor.
  static Vocab build(
      const std::vector<const std::vector<corpus::SentenceExample>*>& corpora,
      const std::vector<const ontology::Ontology*>& ontologies,
      std::size_t min_freq = 1);

  // Exact token list (specials first); used by checkpoint loading.
  static Vocab from_tokens(std::vector<std::string> tokens);

  static Vocab from_file(const std::string& path);
  void to_file(const std::string& path) const;

  // Specials match exactly; other tokens are lowercased; absent -> [UNK].
  int id(const std::string& token) const;
  std::vector<int> encode(const std::vector<std::string>& tokens) const;

  const std::string& token(int token_id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

}  // namespace eqex::vocab
