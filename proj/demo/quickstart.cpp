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

// Trains a pair of group language models on a toy corpus, scores a new
// transcript under both, and walks the dementia model toward the control
// model.

#include <iomanip>
#include <iostream>

#include "pplab/pplab.hpp"

using namespace pplab;

namespace {

corpus::ParticipantRecord speaker(std::string id, corpus::Group group, std::string_view text) {
  corpus::ParticipantRecord p;
  p.participant_id = std::move(id);
  p.group = group;
  auto seq = corpus::preprocess_text(text);
  seq.participant_id = p.participant_id;
  p.transcripts.push_back(std::move(seq));
  return p;
}

}  // namespace

int main() {
  const char* specific =
      "the boy takes the cookie\nthe girl reaches the jar\nthe mother washes the dish\n"
      "the water spills on the floor\nthe stool falls over\n";
  const char* generic =
      "the boy does the thing\nthe girl goes to the thing\nthe mother does the stuff\n"
      "the water goes on the thing\nthe thing falls over\n";

  std::vector<corpus::ParticipantRecord> people;
  for (int i = 0; i < 4; ++i) {
    people.push_back(speaker("c" + std::to_string(i), corpus::Group::control, specific));
    people.push_back(speaker("d" + std::to_string(i), corpus::Group::dementia, generic));
  }
  const corpus::Corpus train(std::move(people));

  lm::LMConfig cfg;
  cfg.embedding_dim = 16;
  cfg.layer_dims = {16};
  cfg.batch_size = 4;
  cfg.bptt_window = 8;
  cfg.epochs = 30;
  cfg.learning_rate = 1.0;
  cfg.weight_drop = 0.0;

  const auto twins = eval::train_twins(train, cfg, /*min_count=*/1, /*seed=*/42);

  const auto probe = corpus::preprocess_text("the boy does the thing\nthe stool falls over\n");
  const double p_con = lm::perplexity(twins.con, probe);
  const double p_dem = lm::perplexity(twins.dem, probe);
  std::cout << std::fixed << std::setprecision(3) << "P_con " << p_con << "  P_dem " << p_dem
            << "  P_con - P_dem " << p_con - p_dem << "\n";

  for (double a : {0.0, 0.5, 1.0}) {
    const auto mixed = interrogation::interpolate(twins.dem, twins.con, interrogation::InterpolationWeight(a));
    std::cout << "alpha " << a << "  perplexity " << lm::perplexity(mixed, probe) << "\n";
  }
  return 0;
}
