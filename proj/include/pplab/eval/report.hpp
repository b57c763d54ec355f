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

#include <map>
#include <ostream>
#include <string>
#include <utility>

#include "json.hpp"
#include "pplab/csv.hpp"
#include "pplab/eval/loocv.hpp"
#include "pplab/lexstats/regression.hpp"

namespace pplab::eval {

/// The settings that determine results; `jobs` is left out.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["lm"] = c.lm;
  j["alpha"] = c.alpha ? nlohmann::ordered_json(*c.alpha) : nlohmann::ordered_json(nullptr);
  j["pretrained_embeddings"] =
      c.pretrained_embeddings ? nlohmann::ordered_json(*c.pretrained_embeddings) : nlohmann::ordered_json(nullptr);
  j["repetitions"] = c.repetitions;
  j["seeds"] = c.seeds;
  j["min_count"] = c.min_count;
  return j;
}

/// Reads any subset of the RunConfig fields over the values in `c`.
template <typename Json>
void update_from_json(RunConfig& c, const Json& j) {
  if (!j.is_object()) throw InvalidArgument("run configuration must be a JSON object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "lm") lm::update_from_json(c.lm, v);
      else if (k == "alpha") c.alpha = v.is_null() ? std::nullopt : std::optional<double>(v.template get<double>());
      else if (k == "pretrained_embeddings")
        c.pretrained_embeddings = v.is_null() ? std::nullopt : std::optional<std::string>(v.template get<std::string>());
      else if (k == "repetitions") c.repetitions = v.template get<int>();
      else if (k == "seeds") c.seeds = v.template get<std::vector<std::uint64_t>>();
      else if (k == "min_count") c.min_count = v.template get<int>();
      else if (k == "jobs") c.jobs = v.template get<int>();
      else throw InvalidArgument("unknown run config field '" + k + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad run configuration: ") + e.what());
  }
}

inline nlohmann::ordered_json to_json(const Summary& s) {
  nlohmann::ordered_json j;
  j["mean"] = s.mean;
  j["ci_half_width"] = s.half_width ? nlohmann::ordered_json(*s.half_width) : nlohmann::ordered_json(nullptr);
  return j;
}

inline nlohmann::ordered_json to_json(const MetricSet& m) {
  return {{"auc_diff", m.auc_diff}, {"auc_con", m.auc_con}, {"auc_model", m.auc_model},
          {"acc_eer_diff", m.acc_eer_diff}};
}

inline nlohmann::ordered_json to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  j["ci_method"] = r.ci_method;
  j["summary"] = {{"auc_diff", to_json(r.auc_diff)},
                  {"auc_con", to_json(r.auc_con)},
                  {"auc_model", to_json(r.auc_model)},
                  {"acc_eer_diff", to_json(r.acc_eer_diff)}};
  auto& reps = j["per_repetition"] = nlohmann::ordered_json::array();
  for (auto& m : r.per_repetition) reps.push_back(to_json(m));
  auto& scores = j["scores"] = nlohmann::ordered_json::array();
  for (auto& s : r.scores)
    scores.push_back({{"participant_id", s.participant_id},
                      {"visit", s.visit},
                      {"repetition", s.repetition},
                      {"label", corpus::to_string(s.label)},
                      {"p_con", s.p_con},
                      {"p_model", s.p_model},
                      {"diff", s.diff}});
  return j;
}

inline nlohmann::ordered_json to_json(const ScreeningReport& s) {
  auto j = to_json(s.report);
  j.erase("scores");
  j["participants_included"] = s.participants_included;
  j["excluded_low_mmse"] = s.excluded_low_mmse;
  j["excluded_missing_mmse"] = s.excluded_missing_mmse;
  return j;
}

inline nlohmann::ordered_json to_json(const PerplexitySummary& s) {
  auto opt = [](const std::optional<Summary>& v) { return v ? to_json(*v) : nlohmann::ordered_json(nullptr); };
  return {{"all_dementia", opt(s.all_dementia)},
          {"all_dementia_transcripts", s.all_count},
          {"severe", opt(s.severe)},
          {"severe_transcripts", s.severe_count}};
}

/// CSV `participant_id,visit,label,p_con,p_model,diff,repetition`.
inline void write_scores_csv(const EvaluationReport& r, std::ostream& os) {
  csv::write_row(os, {"participant_id", "visit", "label", "p_con", "p_model", "diff", "repetition"});
  for (auto& s : r.scores)
    csv::write_row(os, {s.participant_id, std::to_string(s.visit), std::string(corpus::to_string(s.label)),
                        csv::format_number(s.p_con), csv::format_number(s.p_model), csv::format_number(s.diff),
                        std::to_string(s.repetition)});
}

/// One-row summary CSV: mean and half-width of each metric.
inline void write_summary_csv(const EvaluationReport& r, std::ostream& os) {
  csv::write_row(os, {"auc_diff", "auc_diff_ci", "auc_con", "auc_con_ci", "auc_model", "auc_model_ci", "acc_eer_diff",
                      "acc_eer_diff_ci"});
  csv::Row row;
  for (const Summary* s : {&r.auc_diff, &r.auc_con, &r.auc_model, &r.acc_eer_diff}) {
    row.push_back(csv::format_number(s->mean));
    row.push_back(s->half_width ? csv::format_number(*s->half_width) : "");
  }
  csv::write_row(os, row);
}

/// Per-transcript perplexities averaged over repetitions.
inline lexstats::ScoreTable score_table(const EvaluationReport& r) {
  std::map<std::pair<std::string, int>, std::pair<lexstats::TranscriptPerplexities, int>> acc;
  for (auto& s : r.scores) {
    auto& [sum, n] = acc[{s.participant_id, s.visit}];
    sum.p_con += s.p_con;
    sum.p_dem += s.p_model;
    ++n;
  }
  lexstats::ScoreTable out;
  for (auto& [key, v] : acc) out[key] = {v.first.p_dem / v.second, v.first.p_con / v.second};
  return out;
}

/// Reads a scores CSV as written by write_scores_csv; repeated rows for one
/// transcript are averaged.
inline lexstats::ScoreTable read_scores_csv(std::istream& is) {
  const auto rows = csv::read_all(is);
  if (rows.empty()) throw ParseError("scores CSV is empty", 1);
  const auto& h = rows.front();
  const auto pid = csv::column(h, "participant_id"), visit = csv::column(h, "visit"),
             con = csv::column(h, "p_con"), model = csv::column(h, "p_model");
  EvaluationReport r;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != h.size()) throw ParseError("scores CSV row has wrong field count", i + 1);
    PairedScore s;
    s.participant_id = row[pid];
    try {
      s.visit = std::stoi(row[visit]);
      s.p_con = std::stod(row[con]);
      s.p_model = std::stod(row[model]);
    } catch (const std::exception&) {
      throw ParseError("scores CSV has a non-numeric field", i + 1);
    }
    r.scores.push_back(s);
  }
  return score_table(r);
}

}  // namespace pplab::eval
