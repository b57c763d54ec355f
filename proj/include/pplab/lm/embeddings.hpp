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

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pplab/error.hpp"

namespace pplab::lm {

/// Pre-trained word vectors, optionally with character n-gram vectors used
/// to compose vectors for out-of-vocabulary words.
///
/// Text format: one entry per line, a token followed by D numbers, space
/// separated. Tokens starting with the sigil "##" are subword (character
/// n-gram) entries, e.g. "##<co". A leading "count dim" header line, as
/// written by fastText, is skipped.
class EmbeddingTable {
 public:
  static constexpr std::string_view kSubwordSigil = "##";
  static constexpr int kMinGram = 3;
  static constexpr int kMaxGram = 6;

  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const { return dim_; }
  std::size_t word_count() const { return words_.size(); }
  std::size_t subword_count() const { return subwords_.size(); }

  void add_word(std::string word, std::vector<float> v) { insert(words_, std::move(word), std::move(v)); }
  void add_subword(std::string gram, std::vector<float> v) { insert(subwords_, std::move(gram), std::move(v)); }

  /// Character n-grams (n in [3, 6]) of the word wrapped in '<' '>'
  /// boundary marks, in order of n then position; duplicates kept.
  static std::vector<std::string> char_ngrams(std::string_view word) {
    const std::string w = "<" + std::string(word) + ">";
    std::vector<std::string> grams;
    for (int n = kMinGram; n <= kMaxGram; ++n)
      for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= w.size(); ++i) grams.push_back(w.substr(i, n));
    return grams;
  }

  /// The word's own vector; else the mean over its n-grams present in the
  /// table; else nothing.
  std::optional<std::vector<float>> lookup(const std::string& word) const {
    if (auto it = words_.find(word); it != words_.end()) return it->second;
    if (subwords_.empty()) return std::nullopt;
    std::vector<double> sum(dim_, 0.0);
    std::size_t hits = 0;
    for (const auto& g : char_ngrams(word)) {
      auto it = subwords_.find(g);
      if (it == subwords_.end()) continue;
      for (std::size_t k = 0; k < dim_; ++k) sum[k] += it->second[k];
      ++hits;
    }
    if (hits == 0) return std::nullopt;
    std::vector<float> mean(dim_);
    for (std::size_t k = 0; k < dim_; ++k) mean[k] = static_cast<float>(sum[k] / static_cast<double>(hits));
    return mean;
  }

 private:
  using Map = std::unordered_map<std::string, std::vector<float>>;

  void insert(Map& m, std::string key, std::vector<float> v) {
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) throw ShapeMismatch("embedding dimension mismatch for '" + key + "'");
    m[std::move(key)] = std::move(v);
  }

  std::size_t dim_ = 0;
  Map words_;
  Map subwords_;
};

inline EmbeddingTable read_embeddings(std::istream& is) {
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (!rest.empty()) {
      auto start = rest.find_first_not_of(" \t");
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      auto end = rest.find_first_of(" \t");
      fields.push_back(rest.substr(0, end));
      rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
    }
    if (fields.empty()) continue;

    std::vector<float> v;
    v.reserve(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      std::string s(fields[i]);
      char* end = nullptr;
      float x = std::strtof(s.c_str(), &end);
      if (end != s.c_str() + s.size()) throw ParseError("bad number '" + s + "'", line_no);
      v.push_back(x);
    }
    if (line_no == 1 && fields.size() == 2) {
      long long count = 0;
      auto [p, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), count);
      if (ec == std::errc{} && p == fields[0].data() + fields[0].size()) continue;  // "count dim" header
    }
    if (v.empty()) throw ParseError("entry without a vector", line_no);
    if (dim == 0) dim = v.size();
    if (v.size() != dim)
      throw ParseError("expected " + std::to_string(dim) + " values, found " + std::to_string(v.size()), line_no);
    std::string token(fields[0]);
    if (token.rfind(EmbeddingTable::kSubwordSigil, 0) == 0 && token.size() > EmbeddingTable::kSubwordSigil.size())
      table.add_subword(token.substr(EmbeddingTable::kSubwordSigil.size()), std::move(v));
    else
      table.add_word(std::move(token), std::move(v));
  }
  return table;
}

inline EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open embeddings file " + path);
  return read_embeddings(in);
}

}  // namespace pplab::lm
