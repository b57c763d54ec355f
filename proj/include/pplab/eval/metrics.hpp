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
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "pplab/error.hpp"

namespace pplab::eval {

/// A classifier score with its true label; `positive` marks a dementia case.
/// Higher scores are taken to indicate the positive class.
struct LabeledScore {
  double score = 0.0;
  bool positive = false;
};

namespace detail {

inline std::pair<std::size_t, std::size_t> class_counts(std::span<const LabeledScore> s) {
  std::size_t pos = 0;
  for (auto& x : s) pos += x.positive;
  if (pos == 0 || pos == s.size()) throw InvalidArgument("metric needs both classes present");
  return {pos, s.size() - pos};
}

}  // namespace detail

/// Area under the ROC curve via the Mann-Whitney rank sum: the probability
/// that a random positive outscores a random negative, ties counting half.
inline double auc(std::span<const LabeledScore> scores) {
  const auto [n_pos, n_neg] = detail::class_counts(scores);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a].score < scores[b].score; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]].score == scores[order[i]].score) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k)
      if (scores[order[k]].positive) rank_sum += rank;
    i = j + 1;
  }
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

struct EerResult {
  double accuracy = 0.0;
  double threshold = 0.0;  // scores strictly above are called positive
};

/// Accuracy at the equal error rate. Candidate thresholds are the midpoints
/// between consecutive distinct scores plus one below the minimum and one
/// above the maximum; the candidate minimizing |FPR - FNR| wins, the lowest
/// such threshold on ties. Rates are compared exactly in integer arithmetic.
inline EerResult acc_eer(std::span<const LabeledScore> scores) {
  const auto [n_pos, n_neg] = detail::class_counts(scores);
  std::vector<LabeledScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.score < b.score; });

  // Threshold below everything: all called positive.
  long long fp = static_cast<long long>(n_neg), fn = 0;
  double best_threshold = sorted.front().score - 1.0;
  auto gap = [&](long long fp_, long long fn_) {
    return std::llabs(fp_ * static_cast<long long>(n_pos) - fn_ * static_cast<long long>(n_neg));
  };
  long long best_gap = gap(fp, fn);
  long long best_fp = fp, best_fn = fn;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j].score == sorted[i].score) {
      if (sorted[j].positive) ++fn; else --fp;
      ++j;
    }
    const double threshold = j < sorted.size() ? 0.5 * (sorted[i].score + sorted[j].score) : sorted.back().score + 1.0;
    if (const long long g = gap(fp, fn); g < best_gap) {
      best_gap = g;
      best_threshold = threshold;
      best_fp = fp;
      best_fn = fn;
    }
    i = j;
  }
  const double correct = static_cast<double>(n_pos - static_cast<std::size_t>(best_fn)) +
                         static_cast<double>(n_neg - static_cast<std::size_t>(best_fp));
  return {correct / static_cast<double>(scores.size()), best_threshold};
}

struct Interval {
  double mean = 0.0;
  double half_width = 0.0;
};

/// mean +/- 1.96 * sd / sqrt(n), sd with n - 1 denominator.
inline Interval confidence_interval(std::span<const double> values) {
  if (values.size() < 2) throw InvalidArgument("confidence interval needs at least two values");
  if (std::all_of(values.begin(), values.end(), [&](double v) { return v == values.front(); }))
    return {values.front(), 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

inline constexpr const char* kCiMethod = "normal approximation over repetitions: mean +/- 1.96 * sd / sqrt(n)";

}  // namespace pplab::eval
