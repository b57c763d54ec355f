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
#include <functional>
#include <string>

#include "pplab/corpus/preprocess.hpp"
#include "pplab/lm/lstm.hpp"
#include "pplab/lm/perplexity.hpp"

namespace pplab::lm {

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::string worst_tensor;
  Eigen::Index worst_index = -1;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;  // number of parameters compared
};

using TensorFilter = std::function<bool(const std::string& tensor_name)>;

/// Relative error with an absolute floor, so that two near-zero gradients
/// are compared on an absolute scale.
inline double relative_error(long double analytic, long double numeric, long double floor = 1e-8L) {
  const long double denom = std::max({std::fabs(analytic), std::fabs(numeric), floor});
  return static_cast<double>(std::fabs(analytic - numeric) / denom);
}

namespace detail {

// Summed loss of a window, recomputed through forward() rather than the
// training pass so the two derivative routes share no loss code.
template <typename T>
T window_loss(const BasicLMParameters<T>& p, const IdMatrix& inputs, const IdMatrix& targets,
              const DropMasks<T>* masks) {
  auto out = forward(p, inputs, LMState<T>::zeros(p, static_cast<int>(inputs.cols())), masks);
  T total = 0;
  for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
    const auto& logits = out.logits[static_cast<std::size_t>(t)];
    for (Eigen::Index b = 0; b < inputs.cols(); ++b) {
      const T mx = logits.col(b).maxCoeff();
      T s = 0;
      for (Eigen::Index v = 0; v < logits.rows(); ++v) s += std::exp(logits(v, b) - mx);
      total += mx + std::log(s) - logits(targets(t, b), b);
    }
  }
  return total;
}

}  // namespace detail

/// Compares the analytic gradient of the summed loss of `seq`'s first
/// window (bptt_window steps, batch one, zero initial state) against
/// central finite differences, for every parameter passing `filter`.
/// With weight_drop > 0 one DropConnect draw is fixed for both routes.
/// Runs in T = long double by default.
template <typename T = long double>
GradientCheckResult gradient_check(const LMConfig& config, const corpus::Vocabulary& vocab,
                                   const corpus::TokenSequence& seq, double epsilon,
                                   const TensorFilter& filter = {}) {
  auto params = init_params<T>(config, vocab, config.seed);
  const auto ids = scoring_ids(vocab, seq);
  if (ids.size() < 2) throw InvalidArgument("gradient check needs at least one token");
  const auto len = static_cast<Eigen::Index>(std::min<std::size_t>(config.bptt_window, ids.size() - 1));
  IdMatrix inputs(len, 1), targets(len, 1);
  for (Eigen::Index t = 0; t < len; ++t) {
    inputs(t, 0) = ids[static_cast<std::size_t>(t)];
    targets(t, 0) = ids[static_cast<std::size_t>(t) + 1];
  }
  Rng rng(mix_seed(config.seed, 0xc4ec));
  DropMasks<T> masks;
  const DropMasks<T>* mask_ptr = nullptr;
  if (config.weight_drop > 0.0) {
    masks = DropMasks<T>::sample(params, config.weight_drop, rng);
    mask_ptr = &masks;
  }

  auto grad = params.zeros_like();
  auto state = LMState<T>::zeros(params, 1);
  loss_and_gradient(params, inputs, targets, state, mask_ptr, grad, 1.0);

  std::vector<std::pair<std::string, Matrix<T>*>> analytic;
  grad.for_each_tensor([&](const std::string& name, Matrix<T>& m) { analytic.emplace_back(name, &m); });

  GradientCheckResult result;
  const T eps = static_cast<T>(epsilon);
  std::size_t k = 0;
  params.for_each_tensor([&](const std::string& name, Matrix<T>& m) {
    const Matrix<T>& a = *analytic[k++].second;
    if (filter && !filter(name)) return;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const T saved = m.data()[i];
      m.data()[i] = saved + eps;
      const T plus = detail::window_loss(params, inputs, targets, mask_ptr);
      m.data()[i] = saved - eps;
      const T minus = detail::window_loss(params, inputs, targets, mask_ptr);
      m.data()[i] = saved;
      const T numeric = (plus - minus) / (2 * eps);
      const double err = relative_error(static_cast<long double>(a.data()[i]), static_cast<long double>(numeric));
      ++result.checked;
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_tensor = name;
        result.worst_index = i;
        result.worst_analytic = static_cast<double>(a.data()[i]);
        result.worst_numeric = static_cast<double>(numeric);
      }
    }
  });
  return result;
}

}  // namespace pplab::lm
