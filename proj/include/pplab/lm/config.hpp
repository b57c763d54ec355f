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

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "pplab/error.hpp"

namespace pplab::lm {

/// Parameter averaging applied over the tail of training.
struct Averaging {
  enum class Kind { none, asgd } kind = Kind::none;
  /// With asgd, averaging starts once this many epochs have completed.
  int start_epoch = 0;

  static Averaging none() { return {}; }
  static Averaging asgd_after_epoch(int k) { return {Kind::asgd, k}; }

  std::string to_string() const { return kind == Kind::none ? "none" : "asgd:" + std::to_string(start_epoch); }
  static Averaging parse(const std::string& s) {
    if (s == "none") return none();
    if (s.rfind("asgd:", 0) == 0) {
      try {
        return asgd_after_epoch(std::stoi(s.substr(5)));
      } catch (const std::exception&) {
      }
    }
    throw InvalidArgument("averaging must be 'none' or 'asgd:K', got '" + s + "'");
  }
  friend bool operator==(const Averaging&, const Averaging&) = default;
};

struct LMConfig {
  int embedding_dim = 200;
  std::vector<int> layer_dims = {800, 200};
  bool tie_embeddings = true;
  double weight_drop = 0.5;  // DropConnect rate on recurrent matrices
  int batch_size = 20;
  int bptt_window = 10;
  int epochs = 20;
  double learning_rate = 20.0;  // 5 is used when starting from pre-trained embeddings
  double grad_clip = 0.25;      // global L2 norm; <= 0 disables clipping
  std::uint64_t seed = 0;
  Averaging averaging;

  int output_dim() const { return layer_dims.back(); }

  void validate() const {
    if (embedding_dim < 1) throw InvalidArgument("embedding_dim must be >= 1");
    if (layer_dims.empty()) throw InvalidArgument("layer_dims must not be empty");
    for (int d : layer_dims)
      if (d < 1) throw InvalidArgument("layer dimensions must be >= 1");
    if (tie_embeddings && layer_dims.back() != embedding_dim)
      throw InvalidArgument("tied embeddings need the last layer dimension (" + std::to_string(layer_dims.back()) +
                            ") to equal embedding_dim (" + std::to_string(embedding_dim) + ")");
    if (!(weight_drop >= 0.0 && weight_drop < 1.0)) throw InvalidArgument("weight_drop must be in [0, 1)");
    if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
    if (bptt_window < 1) throw InvalidArgument("bptt_window must be >= 1");
    if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
    if (averaging.kind == Averaging::Kind::asgd && (averaging.start_epoch < 0 || averaging.start_epoch >= epochs))
      throw InvalidArgument("asgd start epoch must be in [0, epochs)");
  }

  friend bool operator==(const LMConfig&, const LMConfig&) = default;
};

inline void to_json(nlohmann::ordered_json& j, const LMConfig& c) {
  j = nlohmann::ordered_json{{"embedding_dim", c.embedding_dim},
                             {"layer_dims", c.layer_dims},
                             {"tie_embeddings", c.tie_embeddings},
                             {"weight_drop", c.weight_drop},
                             {"batch_size", c.batch_size},
                             {"bptt_window", c.bptt_window},
                             {"epochs", c.epochs},
                             {"learning_rate", c.learning_rate},
                             {"grad_clip", c.grad_clip},
                             {"seed", c.seed},
                             {"averaging", c.averaging.to_string()}};
}

/// Reads any subset of the fields over the defaults in `c`.
template <typename Json>
void update_from_json(LMConfig& c, const Json& j) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const auto& v = it.value();
    if (k == "embedding_dim") c.embedding_dim = v.template get<int>();
    else if (k == "layer_dims") c.layer_dims = v.template get<std::vector<int>>();
    else if (k == "tie_embeddings") c.tie_embeddings = v.template get<bool>();
    else if (k == "weight_drop") c.weight_drop = v.template get<double>();
    else if (k == "batch_size") c.batch_size = v.template get<int>();
    else if (k == "bptt_window") c.bptt_window = v.template get<int>();
    else if (k == "epochs") c.epochs = v.template get<int>();
    else if (k == "learning_rate") c.learning_rate = v.template get<double>();
    else if (k == "grad_clip") c.grad_clip = v.template get<double>();
    else if (k == "seed") c.seed = v.template get<std::uint64_t>();
    else if (k == "averaging") c.averaging = Averaging::parse(v.template get<std::string>());
    else throw InvalidArgument("unknown LM config field '" + k + "'");
  }
}

inline void from_json(const nlohmann::ordered_json& j, LMConfig& c) {
  c = LMConfig{};
  update_from_json(c, j);
}

}  // namespace pplab::lm
