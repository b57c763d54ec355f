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
#include <optional>
#include <tuple>
#include <string>
#include <string_view>
#include <vector>

#include "pplab/error.hpp"

namespace pplab::corpus {

enum class Group { dementia, control };

inline std::string_view to_string(Group g) { return g == Group::dementia ? "dementia" : "control"; }

/// Maps a diagnosis label to a study group. DementiaBank uses ProbableAD and
/// PossibleAD for cases and Control for controls; other diagnoses (MCI,
/// Vascular, ...) have no group and yield nullopt.
inline std::optional<Group> parse_group(std::string_view label) {
  std::string s;
  for (char c : label) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "dementia" || s == "probablead" || s == "possiblead" || s == "ad" || s == "dat")
    return Group::dementia;
  if (s == "control") return Group::control;
  return std::nullopt;
}

/// Participant utterances of one CHAT file, still carrying inline codes.
struct RawTranscript {
  std::string participant_id;
  int visit_index = 0;
  std::vector<std::string> utterances;
  std::optional<int> mmse;

  // Values found in the participant's @ID header, if any.
  std::optional<Group> group;
  std::optional<double> age;
  std::optional<double> education;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::optional<double> leading_number(std::string_view s) {
  s = trim(s);
  std::size_t n = 0;
  while (n < s.size() && (std::isdigit(static_cast<unsigned char>(s[n])) || s[n] == '.')) ++n;
  if (n == 0) return std::nullopt;
  try {
    return std::stod(std::string(s.substr(0, n)));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

/// "001-2" -> ("001", 2); anything without a numeric "-N" suffix is visit 0.
inline std::pair<std::string, int> split_source_name(std::string_view name) {
  auto slash = name.find_last_of("/\\");
  if (slash != std::string_view::npos) name.remove_prefix(slash + 1);
  if (auto dot = name.rfind('.'); dot != std::string_view::npos && dot > 0) name = name.substr(0, dot);
  auto dash = name.rfind('-');
  if (dash != std::string_view::npos && dash + 1 < name.size() &&
      std::all_of(name.begin() + dash + 1, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return {std::string(name.substr(0, dash)), std::stoi(std::string(name.substr(dash + 1)))};
  }
  return {std::string(name), 0};
}

}  // namespace detail

/// Parses the text of a .cha file. `source_name` (usually the file name,
/// e.g. "001-2.cha") supplies participant id and visit index.
///
/// Only main tiers of the participant speaker are kept: the speaker whose
/// @ID role is "Participant", or PAR when no @ID names one. Dependent tiers
/// (%mor, %gra, ...) and headers never contribute text. Tab-initial lines
/// continue the previous tier.
inline RawTranscript parse_chat(std::string_view text, std::string_view source_name = "") {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  if (detail::trim(text).empty()) throw ParseError("empty CHAT file");

  RawTranscript out;
  std::tie(out.participant_id, out.visit_index) = detail::split_source_name(source_name);

  std::vector<std::string> speakers;
  struct Tier {
    std::string speaker;
    std::string body;
  };
  std::vector<Tier> main_tiers;
  enum class Last { none, main, other } last = Last::none;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (detail::trim(line).empty()) continue;

    const char lead = line.front();
    if (lead == '\t' || lead == ' ') {
      if (last == Last::main) main_tiers.back().body += " " + std::string(detail::trim(line));
      continue;
    }
    if (lead == '*' || lead == '%') {
      auto colon = line.find(':');
      if (colon == std::string_view::npos || colon < 2 || colon + 1 >= line.size() || line[colon + 1] != '\t')
        throw ParseError("malformed tier: expected tab after speaker tag", line_no);
      if (lead == '*') {
        main_tiers.push_back({std::string(line.substr(1, colon - 1)), std::string(line.substr(colon + 2))});
        last = Last::main;
      } else {
        last = Last::other;
      }
      continue;
    }
    if (lead == '@') {
      last = Last::other;
      auto colon = line.find(':');
      if (colon == std::string_view::npos) continue;  // @Begin, @End, @UTF8
      std::string_view key = line.substr(1, colon - 1);
      std::string_view value = detail::trim(line.substr(colon + 1));
      if (key == "ID") {
        auto f = detail::split(value, '|');
        if (f.size() >= 8 && detail::trim(f[7]) == "Participant") {
          speakers.emplace_back(detail::trim(f[2]));
          if (auto a = detail::leading_number(f[3])) out.age = a;
          out.group = parse_group(detail::trim(f[5]));
          if (f.size() >= 9)
            if (auto e = detail::leading_number(f[8])) out.education = e;
          if (f.size() >= 10)
            if (auto m = detail::leading_number(f[9]); m && *m >= 0 && *m <= 30 && *m == static_cast<int>(*m))
              out.mmse = static_cast<int>(*m);
        }
      }
      continue;
    }
    throw ParseError("unrecognized line", line_no);
  }

  if (speakers.empty()) speakers.emplace_back("PAR");
  for (auto& t : main_tiers)
    if (std::find(speakers.begin(), speakers.end(), t.speaker) != speakers.end())
      out.utterances.push_back(std::string(detail::trim(t.body)));
  return out;
}

}  // namespace pplab::corpus
