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
#include <span>
#include <vector>

#include "pplab/corpus/preprocess.hpp"
#include "pplab/error.hpp"
#include "pplab/lm/lstm.hpp"

namespace pplab::lm {

struct TrainReport {
  std::vector<double> epoch_loss;  // token-weighted mean training loss per epoch
  double final_loss = 0.0;
  int epochs_run = 0;

  friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

template <typename T>
struct TrainResult {
  BasicLMParameters<T> params;
  TrainReport report;
};

/// All transcripts joined into one id stream, starting with and separated
/// by <eos>.
inline std::vector<corpus::TokenId> build_stream(std::span<const corpus::TokenSequence> seqs,
                                                 const corpus::Vocabulary& vocab) {
  std::vector<corpus::TokenId> stream{vocab.eos_id()};
  for (const auto& s : seqs) {
    if (s.empty()) continue;
    auto ids = vocab.encode(s);
    stream.insert(stream.end(), ids.begin(), ids.end());
    if (stream.back() != vocab.eos_id()) stream.push_back(vocab.eos_id());
  }
  return stream;
}

/// Stream reshaped into batch_size parallel columns; the tail that does not
/// fill a whole row is dropped.
inline IdMatrix batchify(std::span<const corpus::TokenId> stream, int batch_size) {
  const auto B = static_cast<std::size_t>(batch_size);
  const std::size_t rows = stream.size() / B;
  IdMatrix data(static_cast<Eigen::Index>(rows), batch_size);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < rows; ++t)
      data(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(b)) = stream[b * rows + t];
  return data;
}

namespace detail {

template <typename T>
void require_same_shapes(const LMConfig& a, const LMConfig& b) {
  if (a.embedding_dim != b.embedding_dim || a.layer_dims != b.layer_dims || a.tie_embeddings != b.tie_embeddings)
    throw ShapeMismatch("training config shapes differ from the initial parameters");
}

template <typename T>
double squared_norm(const BasicLMParameters<T>& g) {
  double s = 0.0;
  g.for_each_tensor([&](const std::string&, const Matrix<T>& m) { s += m.template cast<double>().squaredNorm(); });
  return s;
}

}  // namespace detail

/// Truncated-BPTT SGD over the concatenated training transcripts.
///
/// Each epoch restarts from a zero state and walks the batch columns in
/// windows of bptt_window steps, carrying state across windows. Every
/// window takes one SGD step on the mean token loss, after scaling the
/// gradient to at most grad_clip in global L2 norm. DropConnect masks for
/// the recurrent matrices are resampled per window. Deterministic for a
/// fixed config.seed.
template <typename T>
TrainResult<T> train(std::span<const corpus::TokenSequence> train_seqs, const LMConfig& config,
                     const corpus::Vocabulary& vocab, BasicLMParameters<T> init) {
  config.validate();
  detail::require_same_shapes<T>(config, init.config);
  if (!(init.vocab == vocab)) throw ShapeMismatch("initial parameters use a different vocabulary");
  init.config = config;

  const auto stream = build_stream(train_seqs, vocab);
  const std::size_t needed = static_cast<std::size_t>(config.batch_size) * (config.bptt_window + 1);
  if (stream.size() < needed)
    throw InvalidArgument("training corpus has " + std::to_string(stream.size()) + " tokens but batch_size x (bptt_window + 1) = " +
                          std::to_string(needed) + "; use a smaller batch size or BPTT window");
  const IdMatrix data = batchify(stream, config.batch_size);
  const Eigen::Index rows = data.rows();

  TrainResult<T> result{std::move(init), {}};
  auto& params = result.params;
  auto grad = params.zeros_like();
  Rng rng(mix_seed(config.seed, 0x5eed));
  const bool averaging = config.averaging.kind == Averaging::Kind::asgd;
  BasicLMParameters<T> average;
  std::size_t averaged_steps = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    auto state = LMState<T>::zeros(params, config.batch_size);
    LossSum epoch_loss;
    for (Eigen::Index pos = 0; pos + 1 < rows; pos += config.bptt_window) {
      const Eigen::Index len = std::min<Eigen::Index>(config.bptt_window, rows - 1 - pos);
      const IdMatrix inputs = data.middleRows(pos, len);
      const IdMatrix targets = data.middleRows(pos + 1, len);
      grad.for_each_tensor([](const std::string&, Matrix<T>& m) { m.setZero(); });
      DropMasks<T> masks;
      if (config.weight_drop > 0.0) masks = DropMasks<T>::sample(params, config.weight_drop, rng);
      const double n = static_cast<double>(len * config.batch_size);
      auto loss = loss_and_gradient(params, inputs, targets, state, config.weight_drop > 0.0 ? &masks : nullptr,
                                    grad, 1.0 / n);
      epoch_loss.total += loss.total;
      epoch_loss.tokens += loss.tokens;

      double scale = config.learning_rate;
      if (config.grad_clip > 0.0) {
        const double norm = std::sqrt(detail::squared_norm(grad));
        if (norm > config.grad_clip) scale *= config.grad_clip / norm;
      }
      const T step = static_cast<T>(scale);
      std::vector<Matrix<T>*> g;
      grad.for_each_tensor([&](const std::string&, Matrix<T>& m) { g.push_back(&m); });
      std::size_t k = 0;
      params.for_each_tensor([&](const std::string&, Matrix<T>& m) { m -= step * *g[k++]; });

      if (averaging && epoch >= config.averaging.start_epoch) {
        ++averaged_steps;
        if (averaged_steps == 1) {
          average = params;
        } else {
          std::vector<const Matrix<T>*> cur;
          params.for_each_tensor([&](const std::string&, const Matrix<T>& m) { cur.push_back(&m); });
          std::size_t j = 0;
          const T w = static_cast<T>(1.0 / static_cast<double>(averaged_steps));
          average.for_each_tensor([&](const std::string&, Matrix<T>& m) {
            m += w * (*cur[j] - m);
            ++j;
          });
        }
      }
    }
    result.report.epoch_loss.push_back(epoch_loss.mean());
    if (!std::isfinite(epoch_loss.mean())) throw Error("training diverged: non-finite loss");
  }
  if (averaging && averaged_steps > 0) params = std::move(average);
  result.report.epochs_run = config.epochs;
  result.report.final_loss = result.report.epoch_loss.back();
  return result;
}

}  // namespace pplab::lm
