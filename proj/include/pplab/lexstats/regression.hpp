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
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "pplab/corpus/corpus.hpp"
#include "pplab/lexstats/lexicon.hpp"
#include "pplab/lexstats/ols.hpp"

namespace pplab::lexstats {

struct TranscriptPerplexities {
  double p_dem = 0.0;
  double p_con = 0.0;
};

/// (participant_id, visit) -> perplexities of that transcript.
using ScoreTable = std::map<std::pair<std::string, int>, TranscriptPerplexities>;

struct RegressionDataset {
  static inline const std::vector<std::string> kColumns = {"p_dem", "p_con", "age", "education", "length",
                                                           "intercept"};
  Eigen::MatrixXd X;
  Eigen::VectorXd y;  // mean log10 lexical frequency
  std::vector<std::string> participants;
  std::map<std::string, std::size_t> excluded;  // reason -> count
};

/// One row per participant from the earliest visit: y is the narrative's
/// mean log lexical frequency; columns p_dem, p_con, age, education,
/// narrative length in preprocessed word tokens, intercept. Rows lacking a
/// covariate, a score, or any eligible word are dropped and counted by
/// reason.
inline RegressionDataset regression_dataset(const corpus::Corpus& corpus, const ScoreTable& scores,
                                            const FrequencyLexicon& lex, const PosSource& pos) {
  RegressionDataset ds;
  std::vector<std::array<double, 6>> rows;
  std::vector<double> ys;
  for (const auto& p : corpus.participants()) {
    const auto& seq = p.baseline();
    auto it = scores.find({p.participant_id, seq.visit});
    if (it == scores.end()) {
      ++ds.excluded["missing_score"];
      continue;
    }
    if (!p.age_at_baseline) {
      ++ds.excluded["missing_age"];
      continue;
    }
    if (!p.education) {
      ++ds.excluded["missing_education"];
      continue;
    }
    auto mlf = mean_log_lexical_frequency(seq, pos.tag(seq), lex);
    if (!mlf) {
      ++ds.excluded["no_eligible_words"];
      continue;
    }
    rows.push_back({it->second.p_dem, it->second.p_con, *p.age_at_baseline, *p.education,
                    static_cast<double>(seq.tokens.size()), 1.0});
    ys.push_back(*mlf);
    ds.participants.push_back(p.participant_id);
  }
  if (rows.empty()) throw InvalidArgument("regression dataset is empty");
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), 6);
  ds.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < 6; ++j) ds.X(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    ds.y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  return ds;
}

inline nlohmann::ordered_json regression_report(const RegressionDataset& ds, const RegressionResult& r) {
  auto j = to_json(r);
  j["dependent"] = "mean_log10_lexical_frequency";
  j["rows_used"] = ds.participants.size();
  nlohmann::ordered_json ex = nlohmann::ordered_json::object();
  for (auto& [reason, n] : ds.excluded) ex[reason] = n;
  j["excluded"] = ex;
  return j;
}

}  // namespace pplab::lexstats
