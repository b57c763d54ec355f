/* Copyright 2026 The pplab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pplab/corpus/preprocess.hpp"
#include "pplab/error.hpp"

namespace pplab::corpus {

using TokenId = std::int32_t;

/// Dense token <-> id map. Ids 0 and 1 are the reserved unknown and
/// end-of-sequence tokens; their spellings contain '<' and '>' and so can
/// never come out of preprocessing.
class Vocabulary {
 public:
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kEos = "<eos>";

  Vocabulary() : Vocabulary(std::vector<std::string>{kUnk, kEos}) {}

  /// Rebuilds a vocabulary from its id-ordered token list (as stored in a
  /// checkpoint). The list must start with the two reserved tokens.
  explicit Vocabulary(std::vector<std::string> id_to_token) : id_to_token_(std::move(id_to_token)) {
    if (id_to_token_.size() < 2 || id_to_token_[0] != kUnk || id_to_token_[1] != kEos)
      throw InvalidArgument("vocabulary must begin with <unk>, <eos>");
    for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
      if (id_to_token_[i].empty()) throw InvalidArgument("empty token in vocabulary");
      if (!token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i)).second)
        throw InvalidArgument("duplicate token in vocabulary: " + id_to_token_[i]);
    }
  }

  std::size_t size() const { return id_to_token_.size(); }
  TokenId unk_id() const { return 0; }
  TokenId eos_id() const { return 1; }

  bool contains(const std::string& token) const { return token_to_id_.contains(token); }

  TokenId id(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? unk_id() : it->second;
  }

  const std::string& token(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= size()) throw InvalidArgument("token id out of range");
    return id_to_token_[static_cast<std::size_t>(id)];
  }

  const std::vector<std::string>& tokens() const { return id_to_token_; }

  /// Word ids of `seq`, with <eos> after every recorded utterance end.
  std::vector<TokenId> encode(const TokenSequence& seq) const {
    std::vector<TokenId> ids;
    ids.reserve(seq.tokens.size() + seq.utterance_ends.size());
    auto end = seq.utterance_ends.begin();
    for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
      ids.push_back(id(seq.tokens[i]));
      while (end != seq.utterance_ends.end() && *end == i + 1) {
        ids.push_back(eos_id());
        ++end;
      }
    }
    return ids;
  }

  std::vector<TokenId> encode(std::span<const std::string> tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }

  std::vector<std::string> decode(std::span<const TokenId> ids) const {
    std::vector<std::string> out;
    out.reserve(ids.size());
    for (auto i : ids) out.push_back(token(i));
    return out;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.id_to_token_ == b.id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
};

/// Vocabulary of every token occurring at least `min_count` times. Ids are
/// assigned by descending count, ties broken alphabetically.
inline Vocabulary build_vocab(std::span<const TokenSequence> sequences, int min_count = 1) {
  if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sequences)
    for (const auto& t : s.tokens) ++counts[t];
  if (counts.empty()) throw InvalidArgument("cannot build a vocabulary from no tokens");
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= static_cast<std::size_t>(min_count)) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> list{Vocabulary::kUnk, Vocabulary::kEos};
  for (auto& [tok, n] : kept) list.push_back(tok);
  return Vocabulary(std::move(list));
}

}  // namespace pplab::corpus
