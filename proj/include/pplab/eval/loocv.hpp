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
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "pplab/corpus/corpus.hpp"
#include "pplab/corpus/vocabulary.hpp"
#include "pplab/eval/metrics.hpp"
#include "pplab/interrogation/interpolate.hpp"
#include "pplab/lm/embeddings.hpp"
#include "pplab/lm/perplexity.hpp"
#include "pplab/lm/train.hpp"
#include "pplab/random.hpp"

namespace pplab::eval {

using corpus::Group;

/// Paired perplexities of one held-out transcript. `p_model` is the
/// dementia model's perplexity, or the interpolated model's when an alpha
/// is set. Larger `diff` means more dementia-like.
struct PairedScore {
  std::string participant_id;
  int visit = 0;
  int repetition = 0;
  Group label = Group::control;
  double p_con = 0.0;
  double p_model = 0.0;
  double diff = 0.0;  // p_con - p_model
};

struct RunConfig {
  lm::LMConfig lm;
  std::optional<double> alpha;
  std::optional<std::string> pretrained_embeddings;
  int repetitions = 1;
  std::vector<std::uint64_t> seeds = {0};
  int min_count = 1;
  /// Fold workers; 0 uses the hardware concurrency.
  int jobs = 1;

  void validate() const {
    lm.validate();
    if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
    if (seeds.size() != static_cast<std::size_t>(repetitions))
      throw InvalidArgument("need exactly one seed per repetition (" + std::to_string(repetitions) + "), got " +
                            std::to_string(seeds.size()));
    if (alpha) interrogation::InterpolationWeight{*alpha};
    if (min_count < 1) throw InvalidArgument("min_count must be >= 1");
  }
};

struct MetricSet {
  double auc_diff = 0.0;
  double auc_con = 0.0;    // higher p_con = dementia
  double auc_model = 0.0;  // lower p_model = dementia
  double acc_eer_diff = 0.0;
};

/// Mean over repetitions, with a confidence half-width when there are at
/// least two repetitions.
struct Summary {
  double mean = 0.0;
  std::optional<double> half_width;
};

struct EvaluationReport {
  std::vector<MetricSet> per_repetition;
  Summary auc_diff, auc_con, auc_model, acc_eer_diff;
  std::vector<PairedScore> scores;  // ordered by repetition, participant, visit
  std::string ci_method = kCiMethod;
};

/// The models of one fold, passed to an optional observer.
struct FoldModels {
  int repetition;
  const std::string& held_out;
  const lm::LMParameters& con;
  const lm::LMParameters& dem;  // before any interpolation
};

using FoldObserver = std::function<void(const FoldModels&)>;

inline Summary summarize(const std::vector<double>& values) {
  if (values.size() >= 2) {
    auto ci = confidence_interval(values);
    return {ci.mean, ci.half_width};
  }
  return {values.front(), std::nullopt};
}

/// Metrics of a score list: AUC of diff, of p_con, of -p_model, and ACC_eer of diff.
inline MetricSet compute_metrics(const std::vector<PairedScore>& scores) {
  std::vector<LabeledScore> diff, con, model;
  for (auto& s : scores) {
    const bool pos = s.label == Group::dementia;
    diff.push_back({s.diff, pos});
    con.push_back({s.p_con, pos});
    model.push_back({-s.p_model, pos});
  }
  return {auc(diff), auc(con), auc(model), acc_eer(diff).accuracy};
}

/// Recomputes per-repetition metrics and their summaries over `scores`.
inline EvaluationReport summarize_scores(std::vector<PairedScore> scores, int repetitions) {
  EvaluationReport r;
  r.scores = std::move(scores);
  std::vector<double> a, c, m, e;
  for (int rep = 0; rep < repetitions; ++rep) {
    std::vector<PairedScore> subset;
    for (auto& s : r.scores)
      if (s.repetition == rep) subset.push_back(s);
    auto ms = compute_metrics(subset);
    r.per_repetition.push_back(ms);
    a.push_back(ms.auc_diff);
    c.push_back(ms.auc_con);
    m.push_back(ms.auc_model);
    e.push_back(ms.acc_eer_diff);
  }
  r.auc_diff = summarize(a);
  r.auc_con = summarize(c);
  r.auc_model = summarize(m);
  r.acc_eer_diff = summarize(e);
  return r;
}

/// Seed of one fold, derived from the run seed and the held-out participant.
inline std::uint64_t fold_seed(std::uint64_t run_seed, const std::string& participant_id) {
  return mix_seed(run_seed, stable_hash(participant_id));
}

/// Trains the model of one group on `train`. The vocabulary covers both
/// groups and the initialization depends only on `seed`, so the control and
/// dementia models of one seed share a starting point and can be
/// interpolated; they differ in data and DropConnect draws.
inline lm::TrainResult<float> train_group_model(const corpus::Corpus& train, Group group,
                                                const lm::LMConfig& config, int min_count, std::uint64_t seed,
                                                const lm::EmbeddingTable* pretrained = nullptr) {
  const auto seqs = train.transcripts(group);
  if (seqs.empty()) throw InvalidArgument(std::string("no ") + std::string(corpus::to_string(group)) + " transcripts to train on");
  const auto all = train.transcripts();
  const auto vocab = corpus::build_vocab(all, min_count);
  lm::LMConfig c = config;
  c.seed = mix_seed(seed, group == Group::control ? 2 : 3);
  return lm::train<float>(seqs, c, vocab, lm::init_params<float>(config, vocab, mix_seed(seed, 1), pretrained));
}

struct TwinModels {
  lm::LMParameters con;
  lm::LMParameters dem;
  lm::TrainReport con_report;
  lm::TrainReport dem_report;
};

inline TwinModels train_twins(const corpus::Corpus& train, const lm::LMConfig& config, int min_count,
                              std::uint64_t seed, const lm::EmbeddingTable* pretrained = nullptr) {
  auto con = train_group_model(train, Group::control, config, min_count, seed, pretrained);
  auto dem = train_group_model(train, Group::dementia, config, min_count, seed, pretrained);
  return {std::move(con.params), std::move(dem.params), con.report, dem.report};
}

/// Trains the twin models of one fold and scores the held-out transcripts.
inline std::vector<PairedScore> run_fold(const corpus::Corpus& corpus, const std::string& held_out,
                                         const RunConfig& cfg, int repetition, const lm::EmbeddingTable* pretrained,
                                         const FoldObserver& observer = {}) {
  const auto split = corpus::split_loocv(corpus, held_out);
  if (split.train.count(Group::control) == 0 || split.train.count(Group::dementia) == 0)
    throw InvalidArgument("holding out " + held_out + " leaves an empty training group");
  const auto seed = fold_seed(cfg.seeds[static_cast<std::size_t>(repetition)], held_out);
  const auto twins = train_twins(split.train, cfg.lm, cfg.min_count, seed, pretrained);
  const auto& con = twins.con;
  const auto& dem = twins.dem;
  if (observer) observer(FoldModels{repetition, held_out, con, dem});

  std::optional<lm::LMParameters> mixed;
  if (cfg.alpha) mixed = interrogation::interpolate(dem, con, interrogation::InterpolationWeight(*cfg.alpha));
  const lm::LMParameters& model = mixed ? *mixed : dem;

  const auto& record = corpus.at(held_out);
  std::vector<PairedScore> out;
  for (const auto& t : split.test) {
    PairedScore s;
    s.participant_id = held_out;
    s.visit = t.visit;
    s.repetition = repetition;
    s.label = record.group;
    s.p_con = lm::perplexity(con, t);
    s.p_model = lm::perplexity(model, t);
    s.diff = s.p_con - s.p_model;
    out.push_back(std::move(s));
  }
  return out;
}

/// Participant-level leave-one-out cross-validation, repeated once per seed.
/// Any failing fold aborts the whole run with an error naming the folds.
inline EvaluationReport run_loocv(const corpus::Corpus& corpus, const RunConfig& cfg,
                                  const FoldObserver& observer = {}) {
  cfg.validate();
  if (corpus.count(Group::control) < 2 || corpus.count(Group::dementia) < 2)
    throw InvalidArgument("LOOCV needs at least two participants per group");
  std::optional<lm::EmbeddingTable> table;
  if (cfg.pretrained_embeddings) table = lm::load_embeddings(*cfg.pretrained_embeddings);

  const auto& people = corpus.participants();
  const std::size_t folds = people.size();
  const std::size_t tasks = folds * static_cast<std::size_t>(cfg.repetitions);
  std::vector<std::vector<PairedScore>> results(tasks);
  std::vector<std::string> errors(tasks);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < tasks; i = next++) {
      const int rep = static_cast<int>(i / folds);
      const auto& pid = people[i % folds].participant_id;
      try {
        results[i] = run_fold(corpus, pid, cfg, rep, table ? &*table : nullptr, observer);
      } catch (const std::exception& e) {
        errors[i] = "fold " + pid + " (repetition " + std::to_string(rep) + "): " + e.what();
      }
    }
  };
  std::size_t jobs = cfg.jobs > 0 ? static_cast<std::size_t>(cfg.jobs) : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, tasks);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::string failures;
  for (auto& e : errors)
    if (!e.empty()) failures += (failures.empty() ? "" : "; ") + e;
  if (!failures.empty()) throw Error("LOOCV failed: " + failures);

  std::vector<PairedScore> scores;
  for (auto& r : results) scores.insert(scores.end(), r.begin(), r.end());
  return summarize_scores(std::move(scores), cfg.repetitions);
}

struct ScreeningReport {
  EvaluationReport report;
  std::size_t participants_included = 0;
  std::size_t excluded_low_mmse = 0;
  std::size_t excluded_missing_mmse = 0;
};

/// Metrics restricted to participants whose last recorded MMSE is at least
/// `mmse_floor`. Participants without any MMSE are excluded and counted.
inline ScreeningReport screening_subset(const corpus::Corpus& corpus, const EvaluationReport& report,
                                        int mmse_floor = 21) {
  ScreeningReport out;
  std::set<std::string> keep;
  for (const auto& p : corpus.participants()) {
    auto last = p.last_mmse();
    if (!last) ++out.excluded_missing_mmse;
    else if (*last < mmse_floor) ++out.excluded_low_mmse;
    else keep.insert(p.participant_id);
  }
  out.participants_included = keep.size();
  std::vector<PairedScore> subset;
  int repetitions = 0;
  for (const auto& s : report.scores) {
    repetitions = std::max(repetitions, s.repetition + 1);
    if (keep.contains(s.participant_id)) subset.push_back(s);
  }
  if (subset.empty()) throw InvalidArgument("screening subset is empty");
  out.report = summarize_scores(std::move(subset), repetitions);
  return out;
}

struct PerplexitySummary {
  std::optional<Summary> all_dementia;  // over held-out dementia transcripts
  std::optional<Summary> severe;        // dementia transcripts with MMSE <= ceiling
  std::size_t all_count = 0;            // transcripts per repetition
  std::size_t severe_count = 0;
};

/// Mean model perplexity on held-out dementia transcripts, overall and for
/// transcripts whose visit MMSE is at most `mmse_ceiling`. Each repetition
/// contributes its mean; the interval is taken across repetitions.
inline PerplexitySummary severity_perplexity_summary(const corpus::Corpus& corpus, const EvaluationReport& report,
                                                     int mmse_ceiling = 10) {
  int repetitions = 0;
  for (auto& s : report.scores) repetitions = std::max(repetitions, s.repetition + 1);
  std::vector<double> all_means, severe_means;
  PerplexitySummary out;
  for (int rep = 0; rep < repetitions; ++rep) {
    double all_sum = 0, severe_sum = 0;
    std::size_t all_n = 0, severe_n = 0;
    for (const auto& s : report.scores) {
      if (s.repetition != rep || s.label != Group::dementia) continue;
      all_sum += s.p_model;
      ++all_n;
      const auto* p = corpus.find(s.participant_id);
      if (!p) continue;
      if (auto m = p->mmse_at(s.visit); m && *m <= mmse_ceiling) {
        severe_sum += s.p_model;
        ++severe_n;
      }
    }
    if (all_n) all_means.push_back(all_sum / static_cast<double>(all_n));
    if (severe_n) severe_means.push_back(severe_sum / static_cast<double>(severe_n));
    out.all_count = all_n;
    out.severe_count = severe_n;
  }
  if (!all_means.empty()) out.all_dementia = summarize(all_means);
  if (!severe_means.empty()) out.severe = summarize(severe_means);
  return out;
}

}  // namespace pplab::eval
