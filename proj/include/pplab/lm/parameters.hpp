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
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pplab/corpus/vocabulary.hpp"
#include "pplab/error.hpp"
#include "pplab/lm/config.hpp"
#include "pplab/lm/embeddings.hpp"
#include "pplab/random.hpp"

namespace pplab::lm {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;

/// One LSTM layer. Gate blocks are stacked in the order input, forget,
/// cell candidate, output: rows [0,H) [H,2H) [2H,3H) [3H,4H).
template <typename T>
struct LstmLayer {
  Matrix<T> input_weight;      // 4H x in
  Matrix<T> recurrent_weight;  // 4H x H
  Matrix<T> bias;              // 4H x 1

  int hidden() const { return static_cast<int>(recurrent_weight.cols()); }
};

/// Complete trainable state of one word-level LSTM language model.
///
/// With tied embeddings the output projection is the embedding matrix
/// itself; `output_weight` is then empty. The same type doubles as the
/// gradient container.
template <typename T>
struct BasicLMParameters {
  corpus::Vocabulary vocab;
  LMConfig config;
  Matrix<T> embedding;  // |V| x D
  std::vector<LstmLayer<T>> layers;
  Matrix<T> output_weight;  // |V| x H_last, untied models only
  Matrix<T> output_bias;    // |V| x 1

  const Matrix<T>& output_projection() const { return config.tie_embeddings ? embedding : output_weight; }
  Matrix<T>& output_projection() { return config.tie_embeddings ? embedding : output_weight; }

  std::size_t vocab_size() const { return vocab.size(); }

  /// Visits every stored tensor as (name, matrix) in a fixed order.
  template <typename F>
  void for_each_tensor(F&& f) {
    f(std::string("embedding"), embedding);
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = "lstm" + std::to_string(l) + ".";
      f(p + "input_weight", layers[l].input_weight);
      f(p + "recurrent_weight", layers[l].recurrent_weight);
      f(p + "bias", layers[l].bias);
    }
    if (!config.tie_embeddings) f(std::string("output.weight"), output_weight);
    f(std::string("output.bias"), output_bias);
  }

  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<BasicLMParameters*>(this)->for_each_tensor(
        [&](const std::string& name, Matrix<T>& m) { f(name, static_cast<const Matrix<T>&>(m)); });
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, const Matrix<T>& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  bool all_finite() const {
    bool ok = true;
    for_each_tensor([&](const std::string&, const Matrix<T>& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  /// Same shapes, all zeros.
  BasicLMParameters zeros_like() const {
    BasicLMParameters z = *this;
    z.for_each_tensor([](const std::string&, Matrix<T>& m) { m.setZero(); });
    return z;
  }

  template <typename U>
  BasicLMParameters<U> cast() const {
    BasicLMParameters<U> out;
    out.vocab = vocab;
    out.config = config;
    out.embedding = embedding.template cast<U>();
    for (auto& l : layers)
      out.layers.push_back({l.input_weight.template cast<U>(), l.recurrent_weight.template cast<U>(),
                            l.bias.template cast<U>()});
    out.output_weight = output_weight.template cast<U>();
    out.output_bias = output_bias.template cast<U>();
    return out;
  }

  friend bool operator==(const BasicLMParameters& a, const BasicLMParameters& b) {
    if (!(a.vocab == b.vocab) || !(a.config == b.config) || a.layers.size() != b.layers.size()) return false;
    auto same = [](const Matrix<T>& x, const Matrix<T>& y) {
      return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    if (!same(a.embedding, b.embedding) || !same(a.output_weight, b.output_weight) ||
        !same(a.output_bias, b.output_bias))
      return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l)
      if (!same(a.layers[l].input_weight, b.layers[l].input_weight) ||
          !same(a.layers[l].recurrent_weight, b.layers[l].recurrent_weight) ||
          !same(a.layers[l].bias, b.layers[l].bias))
        return false;
    return true;
  }
};

using LMParameters = BasicLMParameters<float>;

namespace detail {

template <typename T>
void fill_uniform(Matrix<T>& m, Rng& rng, double scale) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = static_cast<T>(uniform(rng, -scale, scale));
}

}  // namespace detail

/// Fresh parameters: embeddings (and an untied output matrix) uniform in
/// [-0.1, 0.1], LSTM weights and biases uniform in [-1/sqrt(H), 1/sqrt(H)],
/// output bias zero. Words found in `pretrained` take its vector for their
/// embedding row instead.
template <typename T = float>
BasicLMParameters<T> init_params(const LMConfig& config, const corpus::Vocabulary& vocab, std::uint64_t seed,
                                 const EmbeddingTable* pretrained = nullptr) {
  config.validate();
  if (vocab.size() < 3) throw InvalidArgument("vocabulary has no words");
  if (pretrained && pretrained->dim() != static_cast<std::size_t>(config.embedding_dim))
    throw ShapeMismatch("pre-trained embedding dimension " + std::to_string(pretrained->dim()) +
                        " does not match embedding_dim " + std::to_string(config.embedding_dim));
  const auto V = static_cast<Eigen::Index>(vocab.size());
  Rng rng(seed);
  BasicLMParameters<T> p;
  p.vocab = vocab;
  p.config = config;
  p.embedding.resize(V, config.embedding_dim);
  detail::fill_uniform(p.embedding, rng, 0.1);
  int in = config.embedding_dim;
  for (int h : config.layer_dims) {
    LstmLayer<T> layer;
    layer.input_weight.resize(4 * h, in);
    layer.recurrent_weight.resize(4 * h, h);
    layer.bias.resize(4 * h, 1);
    const double s = 1.0 / std::sqrt(static_cast<double>(h));
    detail::fill_uniform(layer.input_weight, rng, s);
    detail::fill_uniform(layer.recurrent_weight, rng, s);
    detail::fill_uniform(layer.bias, rng, s);
    p.layers.push_back(std::move(layer));
    in = h;
  }
  if (!config.tie_embeddings) {
    p.output_weight.resize(V, config.output_dim());
    detail::fill_uniform(p.output_weight, rng, 0.1);
  }
  p.output_bias = Matrix<T>::Zero(V, 1);

  if (pretrained) {
    for (Eigen::Index id = 2; id < V; ++id) {
      if (auto v = pretrained->lookup(vocab.token(static_cast<corpus::TokenId>(id))))
        for (int k = 0; k < config.embedding_dim; ++k) p.embedding(id, k) = static_cast<T>((*v)[k]);
    }
  }
  return p;
}

}  // namespace pplab::lm
