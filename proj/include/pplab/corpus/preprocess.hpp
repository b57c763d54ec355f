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
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pplab/corpus/chat.hpp"

namespace pplab::corpus {

struct PreprocessConfig {
  /// Record utterance boundaries so encoding emits an end-of-sequence token
  /// after every utterance.
  bool append_eos = true;
  /// Pause fillers, matched after lowercasing. &-prefixed forms are always
  /// dropped regardless of this list.
  std::set<std::string, std::less<>> fillers = {"um", "uh", "ah", "er", "hm", "mhm", "eh"};
  /// Unintelligible-speech placeholders.
  std::set<std::string, std::less<>> noise = {"xxx", "yyy", "www", "xx", "yy"};
};

/// A preprocessed transcript: lowercase words drawn from [a-z0-9'].
struct TokenSequence {
  std::vector<std::string> tokens;
  /// Token counts at the end of each non-empty utterance; empty when
  /// boundaries were not recorded.
  std::vector<std::size_t> utterance_ends;
  std::string participant_id;
  int visit = 0;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

namespace detail {

inline bool is_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
}

// True for tokens that carry no spoken lexical material.
inline bool is_dropped(std::string_view t, const PreprocessConfig& cfg) {
  if (t.empty()) return true;
  if (t.front() == '&') return true;  // &-uh fillers, &=laughs events, &+fr fragments
  if (t.size() > 1 && t.front() == '0' && std::isalpha(static_cast<unsigned char>(t[1])))
    return true;  // 0word: omitted, not spoken
  if (std::all_of(t.begin(), t.end(), [](char c) { return c == '\''; })) return true;
  std::string lower;
  for (char c : t) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return cfg.fillers.contains(lower) || cfg.noise.contains(lower);
}

// Removes [..] annotations and \x15..\x15 media bullets, and turns the
// < > retracing scope marks into spaces so scoped words survive.
inline std::string strip_annotations(std::string_view s) {
  std::string out;
  int bracket = 0;
  bool bullet = false;
  for (char c : s) {
    if (c == '\x15') {
      bullet = !bullet;
      out += ' ';
      continue;
    }
    if (bullet) continue;
    if (c == '[') {
      ++bracket;
      out += ' ';
      continue;
    }
    if (c == ']' && bracket > 0) {
      --bracket;
      continue;
    }
    if (bracket > 0) continue;
    out += (c == '<' || c == '>') ? ' ' : c;
  }
  return out;
}

}  // namespace detail

/// Lowercases and cleans one utterance into words.
inline std::vector<std::string> clean_utterance(std::string_view utterance, const PreprocessConfig& cfg = {}) {
  std::vector<std::string> words;
  const std::string text = detail::strip_annotations(utterance);
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    std::string_view raw(text.data() + i, j - i);
    i = j;
    if (raw.empty() || detail::is_dropped(raw, cfg)) continue;
    if (auto at = raw.find('@'); at != std::string_view::npos) raw = raw.substr(0, at);  // word@o special form
    // Compounds (cookie_jar, ice+cream) split into their words.
    std::string piece;
    auto flush = [&] {
      if (!detail::is_dropped(piece, cfg)) words.push_back(piece);
      piece.clear();
    };
    for (char c : raw) {
      char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      if (detail::is_token_char(lc)) {
        piece += lc;
      } else if (c == '_' || c == '+') {
        flush();
      }
    }
    flush();
  }
  return words;
}

/// Applies the transcript cleaning rules; a transcript with no surviving
/// words is returned empty, not reported as an error.
inline TokenSequence preprocess(const RawTranscript& raw, const PreprocessConfig& cfg = {}) {
  TokenSequence out;
  out.participant_id = raw.participant_id;
  out.visit = raw.visit_index;
  for (const auto& u : raw.utterances) {
    auto words = clean_utterance(u, cfg);
    if (words.empty()) continue;
    out.tokens.insert(out.tokens.end(), words.begin(), words.end());
    if (cfg.append_eos) out.utterance_ends.push_back(out.tokens.size());
  }
  return out;
}

/// Preprocesses free text (e.g. a synthetic narrative), one utterance per line.
inline TokenSequence preprocess_text(std::string_view text, const PreprocessConfig& cfg = {}) {
  RawTranscript raw;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    raw.utterances.emplace_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return preprocess(raw, cfg);
}

}  // namespace pplab::corpus
