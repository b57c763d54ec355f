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
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "pplab/corpus/vocabulary.hpp"
#include "pplab/error.hpp"
#include "pplab/lm/parameters.hpp"

namespace pplab::lm {

/// Token ids laid out time x batch: ids(t, b) is step t of stream b.
using IdMatrix = Eigen::Matrix<corpus::TokenId, Eigen::Dynamic, Eigen::Dynamic>;

/// Recurrent state carried between windows: one (h, c) pair per layer,
/// each H x batch.
template <typename T>
struct LMState {
  std::vector<Matrix<T>> h;
  std::vector<Matrix<T>> c;

  static LMState zeros(const BasicLMParameters<T>& p, int batch) {
    LMState s;
    for (auto& l : p.layers) {
      s.h.push_back(Matrix<T>::Zero(l.hidden(), batch));
      s.c.push_back(Matrix<T>::Zero(l.hidden(), batch));
    }
    return s;
  }

  Eigen::Index batch() const { return h.empty() ? 0 : h.front().cols(); }
};

/// DropConnect masks for the recurrent matrices, entries 0 or 1/(1-rate).
template <typename T>
struct DropMasks {
  std::vector<Matrix<T>> recurrent;

  static DropMasks sample(const BasicLMParameters<T>& p, double rate, Rng& rng) {
    DropMasks m;
    const T keep = static_cast<T>(1.0 / (1.0 - rate));
    for (auto& l : p.layers) {
      Matrix<T> mask(l.recurrent_weight.rows(), l.recurrent_weight.cols());
      for (Eigen::Index j = 0; j < mask.cols(); ++j)
        for (Eigen::Index i = 0; i < mask.rows(); ++i) mask(i, j) = uniform01(rng) < rate ? T(0) : keep;
      m.recurrent.push_back(std::move(mask));
    }
    return m;
  }
};

namespace detail {

template <typename T>
void check_ids(const BasicLMParameters<T>& p, const IdMatrix& ids) {
  const auto V = static_cast<corpus::TokenId>(p.vocab_size());
  for (Eigen::Index i = 0; i < ids.size(); ++i)
    if (ids.data()[i] < 0 || ids.data()[i] >= V)
      throw InvalidArgument("token id " + std::to_string(ids.data()[i]) + " out of range for vocabulary of " +
                            std::to_string(V));
}

template <typename T>
void check_state(const BasicLMParameters<T>& p, const LMState<T>& s, Eigen::Index batch) {
  if (s.h.size() != p.layers.size() || s.c.size() != p.layers.size())
    throw ShapeMismatch("state has the wrong number of layers");
  for (std::size_t l = 0; l < p.layers.size(); ++l)
    if (s.h[l].rows() != p.layers[l].hidden() || s.c[l].rows() != p.layers[l].hidden() || s.h[l].cols() != batch ||
        s.c[l].cols() != batch)
      throw ShapeMismatch("state dimensions do not match layer " + std::to_string(l));
}

template <typename T>
Matrix<T> gather_embeddings(const BasicLMParameters<T>& p, const IdMatrix& ids, Eigen::Index t) {
  Matrix<T> x(p.embedding.cols(), ids.cols());
  for (Eigen::Index b = 0; b < ids.cols(); ++b) x.col(b) = p.embedding.row(ids(t, b)).transpose();
  return x;
}

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

/// Activated gates (4H x B, same block order as the weights) for one step.
template <typename T>
Matrix<T> gates(const LstmLayer<T>& layer, const Matrix<T>& recurrent, const Matrix<T>& x, const Matrix<T>& h_prev) {
  const Eigen::Index H = layer.hidden();
  Matrix<T> z = layer.input_weight * x;
  z.noalias() += recurrent * h_prev;
  z.colwise() += layer.bias.col(0);
  z.topRows(2 * H) = z.topRows(2 * H).unaryExpr([](T v) { return sigmoid(v); });
  z.middleRows(2 * H, H) = z.middleRows(2 * H, H).array().tanh().matrix();
  z.bottomRows(H) = z.bottomRows(H).unaryExpr([](T v) { return sigmoid(v); });
  return z;
}

/// log-sum-exp of one logit column, accumulated in double.
template <typename Derived>
double log_sum_exp(const Eigen::MatrixBase<Derived>& col) {
  const double mx = static_cast<double>(col.maxCoeff());
  double s = 0.0;
  for (Eigen::Index i = 0; i < col.size(); ++i) s += std::exp(static_cast<double>(col(i)) - mx);
  return mx + std::log(s);
}

}  // namespace detail

template <typename T>
struct ForwardResult {
  std::vector<Matrix<T>> logits;  // one |V| x batch matrix per step
  LMState<T> state;
};

/// Forward pass over a window. Returns the logits of every step and the
/// state after the window, ready for continuation. Inference passes no
/// masks; `masks` exists so a fixed DropConnect draw can be replayed.
template <typename T>
ForwardResult<T> forward(const BasicLMParameters<T>& p, const IdMatrix& ids, const LMState<T>& state,
                         const DropMasks<T>* masks = nullptr) {
  detail::check_ids(p, ids);
  detail::check_state(p, state, ids.rows() == 0 ? state.batch() : ids.cols());
  ForwardResult<T> out{{}, state};
  const Matrix<T>& proj = p.output_projection();
  std::vector<Matrix<T>> masked;
  if (masks)
    for (std::size_t l = 0; l < p.layers.size(); ++l)
      masked.push_back(p.layers[l].recurrent_weight.cwiseProduct(masks->recurrent[l]));
  for (Eigen::Index t = 0; t < ids.rows(); ++t) {
    Matrix<T> x = detail::gather_embeddings(p, ids, t);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      const Eigen::Index H = p.layers[l].hidden();
      const Matrix<T>& recurrent = masks ? masked[l] : p.layers[l].recurrent_weight;
      Matrix<T> g = detail::gates(p.layers[l], recurrent, x, out.state.h[l]);
      auto& c = out.state.c[l];
      c = g.middleRows(H, H).cwiseProduct(c) + g.topRows(H).cwiseProduct(g.middleRows(2 * H, H));
      out.state.h[l] = g.bottomRows(H).cwiseProduct(c.array().tanh().matrix());
      x = out.state.h[l];
    }
    Matrix<T> logits = proj * x;
    logits.colwise() += p.output_bias.col(0);
    out.logits.push_back(std::move(logits));
  }
  return out;
}

/// Softmax of one logit column, computed in double.
template <typename Derived>
Eigen::VectorXd softmax(const Eigen::MatrixBase<Derived>& col) {
  const double lse = detail::log_sum_exp(col);
  Eigen::VectorXd p(col.size());
  for (Eigen::Index i = 0; i < col.size(); ++i) p(i) = std::exp(static_cast<double>(col(i)) - lse);
  return p;
}

struct LossSum {
  double total = 0.0;  // summed cross-entropy in nats
  std::size_t tokens = 0;
  double mean() const { return total / static_cast<double>(tokens); }
};

/// Forward and backward pass over one window: cross-entropy of predicting
/// targets(t, b) from inputs(0..t, b). `grad_scale` times the gradient of the
/// summed loss is ADDED to `grad` (pass 1/tokens for the mean loss).
/// `state` is advanced to the end of the window. With `masks`, recurrent
/// matrices are DropConnect-masked for the whole window.
template <typename T>
LossSum loss_and_gradient(const BasicLMParameters<T>& p, const IdMatrix& inputs, const IdMatrix& targets,
                          LMState<T>& state, const DropMasks<T>* masks, BasicLMParameters<T>& grad,
                          double grad_scale) {
  if (inputs.rows() != targets.rows() || inputs.cols() != targets.cols())
    throw ShapeMismatch("inputs and targets differ in shape");
  detail::check_ids(p, inputs);
  detail::check_ids(p, targets);
  detail::check_state(p, state, inputs.cols());
  const std::size_t L = p.layers.size();
  const Eigen::Index steps = inputs.rows(), B = inputs.cols();

  std::vector<Matrix<T>> recurrent(L);
  for (std::size_t l = 0; l < L; ++l) {
    if (masks)
      recurrent[l] = p.layers[l].recurrent_weight.cwiseProduct(masks->recurrent[l]);
    else
      recurrent[l] = p.layers[l].recurrent_weight;
  }

  struct StepCache {
    Matrix<T> x, h_prev, c_prev, g, c, tanh_c;
  };
  std::vector<std::vector<StepCache>> cache(static_cast<std::size_t>(steps), std::vector<StepCache>(L));
  std::vector<Matrix<T>> dlogits(static_cast<std::size_t>(steps));
  const Matrix<T>& proj = p.output_projection();
  LossSum loss;

  for (Eigen::Index t = 0; t < steps; ++t) {
    Matrix<T> x = detail::gather_embeddings(p, inputs, t);
    for (std::size_t l = 0; l < L; ++l) {
      const Eigen::Index H = p.layers[l].hidden();
      auto& k = cache[static_cast<std::size_t>(t)][l];
      k.x = std::move(x);
      k.h_prev = state.h[l];
      k.c_prev = state.c[l];
      k.g = detail::gates(p.layers[l], recurrent[l], k.x, k.h_prev);
      k.c = k.g.middleRows(H, H).cwiseProduct(k.c_prev) + k.g.topRows(H).cwiseProduct(k.g.middleRows(2 * H, H));
      k.tanh_c = k.c.array().tanh().matrix();
      state.c[l] = k.c;
      state.h[l] = k.g.bottomRows(H).cwiseProduct(k.tanh_c);
      x = state.h[l];
    }
    Matrix<T> logits = proj * x;
    logits.colwise() += p.output_bias.col(0);
    for (Eigen::Index b = 0; b < B; ++b) {
      const double lse = detail::log_sum_exp(logits.col(b));
      const auto y = targets(t, b);
      loss.total += lse - static_cast<double>(logits(y, b));
      for (Eigen::Index v = 0; v < logits.rows(); ++v)
        logits(v, b) = static_cast<T>(grad_scale * std::exp(static_cast<double>(logits(v, b)) - lse));
      logits(y, b) -= static_cast<T>(grad_scale);
    }
    dlogits[static_cast<std::size_t>(t)] = std::move(logits);
    loss.tokens += static_cast<std::size_t>(B);
  }

  Matrix<T>& dproj = grad.output_projection();
  std::vector<Matrix<T>> dh_next(L), dc_next(L), drecurrent(L);
  for (std::size_t l = 0; l < L; ++l) {
    dh_next[l] = Matrix<T>::Zero(p.layers[l].hidden(), B);
    dc_next[l] = Matrix<T>::Zero(p.layers[l].hidden(), B);
    drecurrent[l] = Matrix<T>::Zero(p.layers[l].recurrent_weight.rows(), p.layers[l].recurrent_weight.cols());
  }

  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    const auto& dlog = dlogits[static_cast<std::size_t>(t)];
    auto& top = cache[static_cast<std::size_t>(t)][L - 1];
    const Eigen::Index Htop = p.layers[L - 1].hidden();
    const Matrix<T> h_top = top.g.bottomRows(Htop).cwiseProduct(top.tanh_c);
    dproj.noalias() += dlog * h_top.transpose();
    grad.output_bias.col(0) += dlog.rowwise().sum();
    Matrix<T> dh = proj.transpose() * dlog;

    for (std::size_t li = L; li-- > 0;) {
      const auto& k = cache[static_cast<std::size_t>(t)][li];
      const Eigen::Index H = p.layers[li].hidden();
      dh += dh_next[li];
      auto i = k.g.topRows(H).array();
      auto f = k.g.middleRows(H, H).array();
      auto gc = k.g.middleRows(2 * H, H).array();
      auto o = k.g.bottomRows(H).array();
      auto tc = k.tanh_c.array();
      Matrix<T> dc = (dh.array() * o * (T(1) - tc * tc)).matrix() + dc_next[li];
      Matrix<T> dz(4 * H, B);
      dz.topRows(H) = (dc.array() * gc * i * (T(1) - i)).matrix();
      dz.middleRows(H, H) = (dc.array() * k.c_prev.array() * f * (T(1) - f)).matrix();
      dz.middleRows(2 * H, H) = (dc.array() * i * (T(1) - gc * gc)).matrix();
      dz.bottomRows(H) = (dh.array() * tc * o * (T(1) - o)).matrix();
      dc_next[li] = (dc.array() * f).matrix();

      auto& gl = grad.layers[li];
      gl.input_weight.noalias() += dz * k.x.transpose();
      drecurrent[li].noalias() += dz * k.h_prev.transpose();
      gl.bias.col(0) += dz.rowwise().sum();
      dh_next[li].noalias() = recurrent[li].transpose() * dz;
      dh.noalias() = p.layers[li].input_weight.transpose() * dz;
    }
    for (Eigen::Index b = 0; b < B; ++b) grad.embedding.row(inputs(t, b)) += dh.col(b).transpose();
  }

  for (std::size_t l = 0; l < L; ++l) {
    if (masks)
      grad.layers[l].recurrent_weight += drecurrent[l].cwiseProduct(masks->recurrent[l]);
    else
      grad.layers[l].recurrent_weight += drecurrent[l];
  }
  return loss;
}

}  // namespace pplab::lm
