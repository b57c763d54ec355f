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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "pplab/corpus/chat.hpp"
#include "pplab/corpus/preprocess.hpp"
#include "pplab/csv.hpp"
#include "pplab/error.hpp"

namespace pplab::corpus {

struct ParticipantRecord {
  std::string participant_id;
  Group group = Group::control;
  std::optional<double> age_at_baseline;
  std::optional<double> education;
  std::vector<TokenSequence> transcripts;  // ordered by visit
  std::vector<std::pair<int, int>> mmse_history;  // (visit, mmse), ordered by visit

  std::optional<int> mmse_at(int visit) const {
    for (auto& [v, m] : mmse_history)
      if (v == visit) return m;
    return std::nullopt;
  }
  std::optional<int> last_mmse() const {
    if (mmse_history.empty()) return std::nullopt;
    return mmse_history.back().second;
  }
  /// The earliest transcript.
  const TokenSequence& baseline() const { return transcripts.front(); }
};

class Corpus {
 public:
  Corpus() = default;

  explicit Corpus(std::vector<ParticipantRecord> participants) : participants_(std::move(participants)) {
    std::set<std::string> seen;
    for (auto& p : participants_) {
      if (!seen.insert(p.participant_id).second) throw InvalidArgument("duplicate participant id " + p.participant_id);
      if (p.transcripts.empty()) throw InvalidArgument("participant " + p.participant_id + " has no transcripts");
      std::set<int> visits;
      for (auto& t : p.transcripts)
        if (!visits.insert(t.visit).second)
          throw InvalidArgument("participant " + p.participant_id + " has duplicate visit " + std::to_string(t.visit));
      std::sort(p.transcripts.begin(), p.transcripts.end(),
                [](const TokenSequence& a, const TokenSequence& b) { return a.visit < b.visit; });
      std::sort(p.mmse_history.begin(), p.mmse_history.end());
    }
  }

  const std::vector<ParticipantRecord>& participants() const { return participants_; }
  std::size_t size() const { return participants_.size(); }

  const ParticipantRecord* find(const std::string& id) const {
    for (auto& p : participants_)
      if (p.participant_id == id) return &p;
    return nullptr;
  }

  const ParticipantRecord& at(const std::string& id) const {
    if (auto* p = find(id)) return *p;
    throw InvalidArgument("unknown participant id " + id);
  }

  std::size_t transcript_count() const {
    std::size_t n = 0;
    for (auto& p : participants_) n += p.transcripts.size();
    return n;
  }

  std::size_t count(Group g) const {
    return static_cast<std::size_t>(
        std::count_if(participants_.begin(), participants_.end(), [g](auto& p) { return p.group == g; }));
  }

  /// All transcripts of participants in group `g`.
  std::vector<TokenSequence> transcripts(Group g) const {
    std::vector<TokenSequence> out;
    for (auto& p : participants_)
      if (p.group == g) out.insert(out.end(), p.transcripts.begin(), p.transcripts.end());
    return out;
  }

  std::vector<TokenSequence> transcripts() const {
    std::vector<TokenSequence> out;
    for (auto& p : participants_) out.insert(out.end(), p.transcripts.begin(), p.transcripts.end());
    return out;
  }

 private:
  std::vector<ParticipantRecord> participants_;
};

struct LoocvSplit {
  Corpus train;
  std::vector<TokenSequence> test;
};

/// Holds out every transcript of one participant.
inline LoocvSplit split_loocv(const Corpus& corpus, const std::string& held_out) {
  const ParticipantRecord& target = corpus.at(held_out);
  std::vector<ParticipantRecord> rest;
  rest.reserve(corpus.size() - 1);
  for (auto& p : corpus.participants())
    if (p.participant_id != held_out) rest.push_back(p);
  return {Corpus(std::move(rest)), target.transcripts};
}

// ---------------------------------------------------------------------------
// Metadata sidecar: participant_id,group,age,education,visit,mmse

struct ParticipantMetadata {
  std::optional<Group> group;
  std::optional<double> age;
  std::optional<double> education;
  std::map<int, int> mmse_by_visit;
};

using MetadataTable = std::map<std::string, ParticipantMetadata>;

inline MetadataTable read_metadata_csv(std::istream& is) {
  auto rows = csv::read_all(is);
  if (rows.empty()) throw ParseError("empty metadata CSV");
  const auto& h = rows.front();
  const auto c_id = csv::column(h, "participant_id"), c_group = csv::column(h, "group"),
             c_age = csv::column(h, "age"), c_edu = csv::column(h, "education"), c_visit = csv::column(h, "visit"),
             c_mmse = csv::column(h, "mmse");
  MetadataTable table;
  auto number = [](const std::string& s, std::size_t line) -> std::optional<double> {
    if (detail::trim(s).empty()) return std::nullopt;
    try {
      std::size_t used = 0;
      double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ParseError("not a number: '" + s + "'", line);
    }
  };
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != h.size()) throw ParseError("wrong field count", r + 1);
    auto& m = table[row[c_id]];
    if (!row[c_group].empty()) {
      auto g = parse_group(row[c_group]);
      if (!g) throw ParseError("unknown group '" + row[c_group] + "'", r + 1);
      m.group = g;
    }
    if (auto a = number(row[c_age], r + 1); a && !m.age) m.age = a;
    if (auto e = number(row[c_edu], r + 1); e && !m.education) m.education = e;
    auto visit = number(row[c_visit], r + 1);
    auto mmse = number(row[c_mmse], r + 1);
    if (visit && mmse) m.mmse_by_visit[static_cast<int>(*visit)] = static_cast<int>(*mmse);
  }
  return table;
}

// ---------------------------------------------------------------------------
// Assembly from parsed CHAT files.

struct BuildSummary {
  std::size_t transcripts = 0;
  std::size_t empty_transcripts = 0;      // nothing left after preprocessing
  std::size_t ungrouped_transcripts = 0;  // no usable group label
  std::vector<std::string> warnings;
};

/// Groups raw transcripts by participant, merges header and sidecar
/// metadata (the sidecar wins on conflict) and preprocesses the text.
inline Corpus build_corpus(const std::vector<RawTranscript>& raws, const MetadataTable& sidecar,
                           const PreprocessConfig& cfg, BuildSummary* summary = nullptr) {
  BuildSummary local;
  BuildSummary& sum = summary ? *summary : local;
  std::map<std::string, ParticipantRecord> records;
  std::map<std::string, std::optional<Group>> groups;
  for (const auto& raw : raws) {
    ++sum.transcripts;
    auto& rec = records[raw.participant_id];
    rec.participant_id = raw.participant_id;
    auto& group = groups[raw.participant_id];
    if (raw.group) group = raw.group;
    if (raw.age && (!rec.age_at_baseline || raw.visit_index == 0)) rec.age_at_baseline = raw.age;
    if (raw.education) rec.education = raw.education;
    if (raw.mmse) rec.mmse_history.emplace_back(raw.visit_index, *raw.mmse);
    auto seq = preprocess(raw, cfg);
    if (seq.empty()) {
      ++sum.empty_transcripts;
      sum.warnings.push_back("empty after preprocessing: " + raw.participant_id + "-" +
                             std::to_string(raw.visit_index));
      continue;
    }
    rec.transcripts.push_back(std::move(seq));
  }

  std::vector<ParticipantRecord> out;
  for (auto& [id, rec] : records) {
    auto& group = groups[id];
    if (auto it = sidecar.find(id); it != sidecar.end()) {
      const auto& m = it->second;
      auto note = [&](const std::string& field) {
        sum.warnings.push_back("metadata conflict for " + id + " (" + field + "): sidecar value used");
      };
      if (m.group) {
        if (group && *group != *m.group) note("group");
        group = m.group;
      }
      if (m.age) {
        if (rec.age_at_baseline && *rec.age_at_baseline != *m.age) note("age");
        rec.age_at_baseline = m.age;
      }
      if (m.education) {
        if (rec.education && *rec.education != *m.education) note("education");
        rec.education = m.education;
      }
      for (auto& [visit, mmse] : m.mmse_by_visit) {
        auto hit = std::find_if(rec.mmse_history.begin(), rec.mmse_history.end(),
                                [v = visit](auto& e) { return e.first == v; });
        if (hit == rec.mmse_history.end()) {
          rec.mmse_history.emplace_back(visit, mmse);
        } else if (hit->second != mmse) {
          note("mmse visit " + std::to_string(visit));
          hit->second = mmse;
        }
      }
    }
    if (!group) {
      sum.ungrouped_transcripts += rec.transcripts.size();
      sum.warnings.push_back("no dementia/control group for " + id + "; excluded");
      continue;
    }
    if (rec.transcripts.empty()) continue;
    rec.group = *group;
    out.push_back(std::move(rec));
  }
  return Corpus(std::move(out));
}

struct ChatDirectory {
  std::vector<RawTranscript> transcripts;
  std::vector<std::pair<std::string, std::string>> failures;  // (path, reason)
};

/// Parses every .cha file below `dir`, in path order. Files that cannot be
/// read or parsed are listed in `failures`.
inline ChatDirectory read_chat_directory(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.path().extension() == ".cha") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  ChatDirectory out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::ostringstream text;
    if (!in || !(text << in.rdbuf())) {
      out.failures.emplace_back(f.string(), "cannot read file");
      continue;
    }
    try {
      out.transcripts.push_back(parse_chat(text.str(), f.filename().string()));
    } catch (const Error& e) {
      out.failures.emplace_back(f.string(), e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Canonical JSON-lines form: one record per transcript.

inline void write_jsonl(const Corpus& corpus, std::ostream& os) {
  for (const auto& p : corpus.participants()) {
    for (const auto& t : p.transcripts) {
      nlohmann::ordered_json j;
      j["participant_id"] = p.participant_id;
      j["visit"] = t.visit;
      j["group"] = to_string(p.group);
      j["tokens"] = t.tokens;
      if (auto m = p.mmse_at(t.visit)) j["mmse"] = *m; else j["mmse"] = nullptr;
      j["utterance_ends"] = t.utterance_ends;
      if (p.age_at_baseline) j["age"] = *p.age_at_baseline; else j["age"] = nullptr;
      if (p.education) j["education"] = *p.education; else j["education"] = nullptr;
      os << j.dump() << '\n';
    }
  }
}

inline Corpus read_jsonl(std::istream& is) {
  std::map<std::string, ParticipantRecord> records;
  std::vector<std::string> order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const std::string id = j.at("participant_id").get<std::string>();
      auto group = parse_group(j.at("group").get<std::string>());
      if (!group) throw ParseError("unknown group", line_no);
      auto [it, fresh] = records.try_emplace(id);
      auto& rec = it->second;
      if (fresh) {
        order.push_back(id);
        rec.participant_id = id;
        rec.group = *group;
      } else if (rec.group != *group) {
        throw ParseError("participant " + id + " listed under two groups", line_no);
      }
      TokenSequence seq;
      seq.participant_id = id;
      seq.visit = j.at("visit").get<int>();
      seq.tokens = j.at("tokens").get<std::vector<std::string>>();
      if (j.contains("utterance_ends")) seq.utterance_ends = j["utterance_ends"].get<std::vector<std::size_t>>();
      if (j.contains("mmse") && !j["mmse"].is_null()) rec.mmse_history.emplace_back(seq.visit, j["mmse"].get<int>());
      if (j.contains("age") && !j["age"].is_null()) rec.age_at_baseline = j["age"].get<double>();
      if (j.contains("education") && !j["education"].is_null()) rec.education = j["education"].get<double>();
      rec.transcripts.push_back(std::move(seq));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  std::vector<ParticipantRecord> out;
  for (auto& id : order) out.push_back(std::move(records[id]));
  return Corpus(std::move(out));
}

}  // namespace pplab::corpus
