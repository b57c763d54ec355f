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

#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pplab/corpus/preprocess.hpp"
#include "pplab/csv.hpp"
#include "pplab/error.hpp"

namespace pplab::interrogation {

/// Log10-frequency band of substituted words, ordered by severity. Words
/// replaced in the 2.5-3.0 band are the most frequent, i.e. the most
/// degraded narrative.
enum class FrequencyBand { baseline = 0, b05_10, b10_15, b15_20, b20_25, b25_30 };

inline constexpr std::array<FrequencyBand, 6> kAllBands = {FrequencyBand::baseline, FrequencyBand::b05_10,
                                                           FrequencyBand::b10_15,   FrequencyBand::b15_20,
                                                           FrequencyBand::b20_25,   FrequencyBand::b25_30};

inline int severity(FrequencyBand b) { return static_cast<int>(b); }

inline std::string_view label(FrequencyBand b) {
  static constexpr std::array<std::string_view, 6> names = {"baseline", "0.5-1.0", "1.0-1.5",
                                                            "1.5-2.0",  "2.0-2.5", "2.5-3.0"};
  return names[static_cast<std::size_t>(b)];
}

inline std::optional<FrequencyBand> parse_band(std::string_view s) {
  for (auto b : kAllBands)
    if (label(b) == s) return b;
  return std::nullopt;
}

/// Band whose half-open interval is [low, high); baseline has none.
inline std::optional<FrequencyBand> band_from_interval(double low, double high) {
  for (auto b : kAllBands) {
    if (b == FrequencyBand::baseline) continue;
    const double lo = 0.5 * severity(b);
    if (std::fabs(low - lo) < 1e-9 && std::fabs(high - (lo + 0.5)) < 1e-9) return b;
  }
  return std::nullopt;
}

struct Substitution {
  FrequencyBand band;
  std::optional<std::string> replacement;  // nullopt deletes the word
};

/// word -> substitutions, each applying from its band onward.
class SubstitutionTable {
 public:
  void add(const std::string& word, FrequencyBand band, std::optional<std::string> replacement) {
    if (band == FrequencyBand::baseline) throw InvalidArgument("substitutions cannot target the baseline band");
    if (replacement) {
      auto cleaned = corpus::clean_utterance(*replacement);
      if (cleaned.size() != 1 || cleaned.front() != *replacement)
        throw InvalidArgument("replacement '" + *replacement + "' is not a single preprocessed token");
    }
    entries_[word].push_back({band, std::move(replacement)});
  }

  bool empty() const { return entries_.empty(); }

  /// Most severe substitution for `word` applicable at `band`, if any.
  const Substitution* applicable(const std::string& word, FrequencyBand band) const {
    auto it = entries_.find(word);
    if (it == entries_.end()) return nullptr;
    const Substitution* best = nullptr;
    for (const auto& s : it->second)
      if (severity(s.band) <= severity(band) && (!best || severity(s.band) >= severity(best->band))) best = &s;
    return best;
  }

 private:
  std::map<std::string, std::vector<Substitution>> entries_;
};

/// CSV `word,band_low,band_high,replacement`; an empty replacement deletes.
inline SubstitutionTable read_substitution_csv(std::istream& is) {
  auto rows = csv::read_all(is);
  if (rows.empty()) throw ParseError("empty substitution table");
  const auto& h = rows.front();
  const auto c_word = csv::column(h, "word"), c_low = csv::column(h, "band_low"),
             c_high = csv::column(h, "band_high"), c_rep = csv::column(h, "replacement");
  SubstitutionTable table;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != h.size()) throw ParseError("wrong field count", r + 1);
    double low = 0, high = 0;
    try {
      low = std::stod(row[c_low]);
      high = std::stod(row[c_high]);
    } catch (const std::exception&) {
      throw ParseError("band bounds must be numbers", r + 1);
    }
    auto band = band_from_interval(low, high);
    if (!band) throw ParseError("no frequency band [" + row[c_low] + ", " + row[c_high] + ")", r + 1);
    try {
      table.add(row[c_word], *band,
                row[c_rep].empty() ? std::nullopt : std::optional<std::string>(row[c_rep]));
    } catch (const InvalidArgument& e) {
      throw ParseError(e.what(), r + 1);
    }
  }
  return table;
}

struct Variant {
  FrequencyBand band;
  corpus::TokenSequence narrative;
};

/// One narrative per band. The variant of band b applies every
/// substitution whose band is no more severe than b; words absent from the
/// table pass through unchanged.
inline std::vector<Variant> generate_variants(const corpus::TokenSequence& base, const SubstitutionTable& table) {
  std::vector<Variant> out;
  for (auto band : kAllBands) {
    corpus::TokenSequence v;
    v.participant_id = base.participant_id;
    v.visit = base.visit;
    auto end = base.utterance_ends.begin();
    for (std::size_t i = 0; i < base.tokens.size(); ++i) {
      const auto* sub = table.applicable(base.tokens[i], band);
      if (!sub)
        v.tokens.push_back(base.tokens[i]);
      else if (sub->replacement)
        v.tokens.push_back(*sub->replacement);
      while (end != base.utterance_ends.end() && *end == i + 1) {
        if (v.utterance_ends.empty() || v.utterance_ends.back() != v.tokens.size())
          if (!v.tokens.empty()) v.utterance_ends.push_back(v.tokens.size());
        ++end;
      }
    }
    out.push_back({band, std::move(v)});
  }
  return out;
}

}  // namespace pplab::interrogation
