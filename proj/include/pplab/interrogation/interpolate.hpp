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

#include <string>
#include <vector>

#include "pplab/error.hpp"
#include "pplab/lm/parameters.hpp"

namespace pplab::interrogation {

/// Proportional contribution of the dementia model, in [0, 1].
class InterpolationWeight {
 public:
  explicit InterpolationWeight(double alpha) : alpha_(alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("interpolation weight must be in [0, 1]");
  }
  double value() const { return alpha_; }

 private:
  double alpha_;
};

/// Entrywise alpha * dem + (1 - alpha) * con over every trainable tensor,
/// embeddings and output bias included. The endpoints return exact copies.
template <typename T>
lm::BasicLMParameters<T> interpolate(const lm::BasicLMParameters<T>& dem, const lm::BasicLMParameters<T>& con,
                                     InterpolationWeight alpha) {
  if (!(dem.vocab == con.vocab)) {
    const auto& a = dem.vocab.tokens();
    const auto& b = con.vocab.tokens();
    std::size_t i = 0;
    while (i < a.size() && i < b.size() && a[i] == b[i]) ++i;
    throw ShapeMismatch("vocabularies differ at id " + std::to_string(i));
  }
  std::vector<std::pair<std::string, const lm::Matrix<T>*>> dem_tensors, con_tensors;
  dem.for_each_tensor([&](const std::string& n, const lm::Matrix<T>& m) { dem_tensors.emplace_back(n, &m); });
  con.for_each_tensor([&](const std::string& n, const lm::Matrix<T>& m) { con_tensors.emplace_back(n, &m); });
  for (std::size_t i = 0; i < std::max(dem_tensors.size(), con_tensors.size()); ++i) {
    if (i >= dem_tensors.size() || i >= con_tensors.size() || dem_tensors[i].first != con_tensors[i].first)
      throw ShapeMismatch("models differ in tensor layout at position " + std::to_string(i));
    const auto& a = *dem_tensors[i].second;
    const auto& b = *con_tensors[i].second;
    if (a.rows() != b.rows() || a.cols() != b.cols())
      throw ShapeMismatch("tensor '" + dem_tensors[i].first + "' differs in shape");
  }

  const double w = alpha.value();
  if (w == 0.0) return con;
  if (w == 1.0) return dem;
  lm::BasicLMParameters<T> out = con;
  std::size_t k = 0;
  const T wd = static_cast<T>(w);
  // con + w * (dem - con)
  out.for_each_tensor([&](const std::string&, lm::Matrix<T>& m) {
    m += wd * (*dem_tensors[k].second - *con_tensors[k].second);
    ++k;
  });
  return out;
}

}  // namespace pplab::interrogation
