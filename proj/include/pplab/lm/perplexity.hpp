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

#include <cmath>
#include <span>
#include <vector>

#include "pplab/corpus/preprocess.hpp"
#include "pplab/lm/lstm.hpp"

namespace pplab::lm {

/// Summed cross-entropy of `ids[1..]` given the preceding ids, computed in
/// a single stateful pass with batch size one.
template <typename T>
LossSum sequence_loss(const BasicLMParameters<T>& p, std::span<const corpus::TokenId> ids) {
  LossSum loss;
  if (ids.size() < 2) return loss;
  IdMatrix inputs(static_cast<Eigen::Index>(ids.size() - 1), 1);
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) inputs(static_cast<Eigen::Index>(i), 0) = ids[i];
  const auto out = forward(p, inputs, LMState<T>::zeros(p, 1));
  for (std::size_t t = 0; t + 1 < ids.size(); ++t) {
    const auto target = ids[t + 1];
    if (target < 0 || static_cast<std::size_t>(target) >= p.vocab_size())
      throw InvalidArgument("token id " + std::to_string(target) + " out of range");
    const auto& logits = out.logits[t];
    loss.total += detail::log_sum_exp(logits.col(0)) - static_cast<double>(logits(target, 0));
    ++loss.tokens;
  }
  return loss;
}

/// Ids scored for a transcript: <eos> as the initial context, followed by the
/// encoded transcript. Every transcript token (and recorded utterance end)
/// is predicted.
inline std::vector<corpus::TokenId> scoring_ids(const corpus::Vocabulary& vocab, const corpus::TokenSequence& seq) {
  std::vector<corpus::TokenId> ids{vocab.eos_id()};
  auto body = vocab.encode(seq);
  ids.insert(ids.end(), body.begin(), body.end());
  return ids;
}

/// exp(mean token cross-entropy) over the whole transcript. Out-of-vocabulary
/// words are scored as the unknown token.
template <typename T>
double perplexity(const BasicLMParameters<T>& p, const corpus::TokenSequence& seq) {
  if (seq.empty()) throw InvalidArgument("cannot score an empty transcript");
  return std::exp(sequence_loss(p, scoring_ids(p.vocab, seq)).mean());
}

}  // namespace pplab::lm
