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

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pplab/corpus/preprocess.hpp"
#include "pplab/error.hpp"

namespace pplab::lexstats {

inline std::string lowercase(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

/// Word frequencies per million (e.g. SUBTLEX-US), looked up case-insensitively.
class FrequencyLexicon {
 public:
  void add(const std::string& word, double per_million) {
    if (!(per_million > 0.0) || !std::isfinite(per_million))
      throw InvalidArgument("frequency of '" + word + "' must be positive");
    freq_[lowercase(word)] = per_million;
  }

  std::optional<double> frequency(const std::string& word) const {
    auto it = freq_.find(lowercase(word));
    if (it == freq_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> log10_frequency(const std::string& word) const {
    auto f = frequency(word);
    if (!f) return std::nullopt;
    return std::log10(*f);
  }

  std::size_t size() const { return freq_.size(); }

 private:
  std::unordered_map<std::string, double> freq_;
};

/// TSV `word<TAB>freq_per_million`. A first line whose frequency field is
/// not numeric is taken as a header.
inline FrequencyLexicon read_lexicon_tsv(std::istream& is) {
  FrequencyLexicon lex;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError("expected word<TAB>frequency", line_no);
    const std::string word = line.substr(0, tab);
    std::string rest = line.substr(tab + 1);
    if (auto tab2 = rest.find('\t'); tab2 != std::string::npos) rest.resize(tab2);
    char* end = nullptr;
    const double f = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str() || *end != '\0') {
      if (line_no == 1) continue;
      throw ParseError("bad frequency '" + rest + "'", line_no);
    }
    try {
      lex.add(word, f);
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return lex;
}

enum class PosTag { noun, verb, other };

/// One coarse tag per token of the annotated sequence.
using PosAnnotation = std::vector<PosTag>;

/// Coarse tag of a tag string: "noun"/"verb"/"other", or Penn/Brown-style
/// tags (NN*, VB*; everything else is other).
inline PosTag parse_tag(const std::string& tag) {
  const std::string t = lowercase(tag);
  if (t == "noun" || t == "n" || t.rfind("nn", 0) == 0) return PosTag::noun;
  if (t == "verb" || t == "v" || t.rfind("vb", 0) == 0) return PosTag::verb;
  return PosTag::other;
}

/// Supplies part-of-speech annotations for transcripts.
class PosSource {
 public:
  virtual ~PosSource() = default;
  virtual PosAnnotation tag(const corpus::TokenSequence& seq) const = 0;
};

/// Tags precomputed by an external tagger: JSON-lines
/// {participant_id, visit, tags: [...]}.
class SidecarPos : public PosSource {
 public:
  void add(const std::string& participant_id, int visit, PosAnnotation tags) {
    tags_[{participant_id, visit}] = std::move(tags);
  }

  PosAnnotation tag(const corpus::TokenSequence& seq) const override {
    auto it = tags_.find({seq.participant_id, seq.visit});
    if (it == tags_.end())
      throw InvalidArgument("no POS annotation for " + seq.participant_id + " visit " + std::to_string(seq.visit));
    if (it->second.size() != seq.tokens.size())
      throw ShapeMismatch("POS annotation for " + seq.participant_id + " has " + std::to_string(it->second.size()) +
                          " tags for " + std::to_string(seq.tokens.size()) + " tokens");
    return it->second;
  }

 private:
  std::map<std::pair<std::string, int>, PosAnnotation> tags_;
};

inline SidecarPos read_pos_jsonl(std::istream& is) {
  SidecarPos pos;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      PosAnnotation tags;
      for (const auto& t : j.at("tags")) tags.push_back(parse_tag(t.get<std::string>()));
      pos.add(j.at("participant_id").get<std::string>(), j.at("visit").get<int>(), std::move(tags));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return pos;
}

/// Fallback tagging from noun and verb word lists. A word on both lists is
/// tagged as a noun.
class WordlistPos : public PosSource {
 public:
  WordlistPos(std::unordered_set<std::string> nouns, std::unordered_set<std::string> verbs)
      : nouns_(std::move(nouns)), verbs_(std::move(verbs)) {}

  PosAnnotation tag(const corpus::TokenSequence& seq) const override {
    PosAnnotation out;
    out.reserve(seq.tokens.size());
    for (const auto& t : seq.tokens)
      out.push_back(nouns_.contains(t) ? PosTag::noun : verbs_.contains(t) ? PosTag::verb : PosTag::other);
    return out;
  }

 private:
  std::unordered_set<std::string> nouns_, verbs_;
};

/// One lowercase word per line; blank lines and '#' comments skipped.
inline std::unordered_set<std::string> read_wordlist(std::istream& is) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    words.insert(lowercase(line));
  }
  return words;
}

/// Mean log10 frequency over the distinct noun and verb word forms of a
/// narrative (no stemming). Words missing from the lexicon are left out;
/// nullopt when no eligible word remains.
inline std::optional<double> mean_log_lexical_frequency(const corpus::TokenSequence& seq, const PosAnnotation& pos,
                                                        const FrequencyLexicon& lex) {
  if (pos.size() != seq.tokens.size()) throw ShapeMismatch("POS annotation not aligned with tokens");
  std::set<std::string> forms;
  for (std::size_t i = 0; i < pos.size(); ++i)
    if (pos[i] != PosTag::other) forms.insert(seq.tokens[i]);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& w : forms) {
    if (auto lf = lex.log10_frequency(w)) {
      sum += *lf;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace pplab::lexstats
