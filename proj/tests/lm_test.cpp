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

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "pplab/lm/checkpoint.hpp"
#include "pplab/lm/config.hpp"
#include "pplab/lm/embeddings.hpp"
#include "pplab/lm/gradient_check.hpp"
#include "pplab/lm/lstm.hpp"
#include "pplab/lm/parameters.hpp"
#include "pplab/lm/perplexity.hpp"
#include "pplab/lm/train.hpp"
#include "support/synthetic.hpp"

using namespace pplab;
using namespace pplab::lm;
using corpus::TokenSequence;
using corpus::Vocabulary;

namespace {

LMConfig small_config(bool tied = true) {
  LMConfig c;
  c.embedding_dim = 6;
  c.layer_dims = tied ? std::vector<int>{5, 6} : std::vector<int>{5, 4};
  c.tie_embeddings = tied;
  c.weight_drop = 0.0;
  c.batch_size = 2;
  c.bptt_window = 4;
  c.epochs = 2;
  c.learning_rate = 0.5;
  c.grad_clip = 1.0;
  c.seed = 3;
  return c;
}

Vocabulary letters(int n) {
  std::vector<std::string> t{Vocabulary::kUnk, Vocabulary::kEos};
  for (int i = 0; i < n; ++i) t.push_back(std::string(1, static_cast<char>('a' + i)));
  return Vocabulary(t);
}

TokenSequence seq_of(std::initializer_list<const char*> words) {
  TokenSequence s;
  for (auto w : words) s.tokens.emplace_back(w);
  s.utterance_ends.push_back(s.tokens.size());
  return s;
}

}  // namespace

TEST(Config, JsonRoundTripAndUnknownField) {
  LMConfig c = small_config(false);
  c.averaging = Averaging::asgd_after_epoch(1);
  nlohmann::ordered_json j = c;
  EXPECT_EQ(j.get<LMConfig>(), c);
  nlohmann::ordered_json bad = {{"embedding_dimm", 3}};
  LMConfig d;
  EXPECT_THROW(update_from_json(d, bad), InvalidArgument);
  EXPECT_THROW(Averaging::parse("asgd"), InvalidArgument);
}

TEST(Config, Validation) {
  LMConfig c = small_config();
  c.epochs = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config();
  c.layer_dims.back() = 7;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = small_config();
  c.weight_drop = 1.0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  EXPECT_NO_THROW(LMConfig{}.validate());
}

TEST(Embeddings, SubwordMeanMatchesHandComputedValue) {
  std::istringstream in(
      "3 2\n"
      "cookie 0.5 0.25\n"
      "##<co 1 2\n"
      "##kie 3 4\n"
      "##ies> 5 9\n"
      "##okie 0 1\n"
      "##xyz 100 100\n");
  auto table = read_embeddings(in);
  EXPECT_EQ(table.dim(), 2u);
  EXPECT_EQ(table.word_count(), 1u);
  EXPECT_EQ(table.subword_count(), 5u);
  EXPECT_EQ(table.lookup("cookie"), (std::vector<float>{0.5f, 0.25f}));
  // "<cookies>" contains <co, kie, ies>, okie: mean (1+3+5+0)/4, (2+4+9+1)/4.
  EXPECT_EQ(table.lookup("cookies"), (std::vector<float>{2.25f, 4.0f}));
  EXPECT_EQ(table.lookup("qqq"), std::nullopt);
}

TEST(Embeddings, InconsistentDimensionNamesLine) {
  std::istringstream in("a 1 2\nb 1 2 3\n");
  try {
    read_embeddings(in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Params, ShapesAndPretrainedRows) {
  auto vocab = letters(4);
  EmbeddingTable table;
  table.add_word("b", {1, 2, 3, 4, 5, 6});
  auto p = init_params<float>(small_config(), vocab, 1, &table);
  EXPECT_EQ(p.embedding.rows(), 6);
  EXPECT_EQ(p.embedding.cols(), 6);
  EXPECT_EQ(p.layers[0].input_weight.rows(), 20);
  EXPECT_EQ(p.layers[0].input_weight.cols(), 6);
  EXPECT_EQ(p.layers[1].recurrent_weight.cols(), 6);
  EXPECT_EQ(p.output_weight.size(), 0);
  EXPECT_EQ(p.output_bias.rows(), 6);
  const auto b = vocab.id("b");
  for (int k = 0; k < 6; ++k) EXPECT_EQ(p.embedding(b, k), static_cast<float>(k + 1));
  EXPECT_TRUE((p.output_bias.array() == 0.0f).all());

  EmbeddingTable wrong;
  wrong.add_word("b", {1, 2});
  EXPECT_THROW(init_params<float>(small_config(), vocab, 1, &wrong), ShapeMismatch);
}

TEST(Params, SameSeedSameParameters) {
  auto vocab = letters(4);
  EXPECT_EQ(init_params<float>(small_config(), vocab, 9), init_params<float>(small_config(), vocab, 9));
  EXPECT_FALSE(init_params<float>(small_config(), vocab, 9) == init_params<float>(small_config(), vocab, 10));
}

TEST(Params, TiedEmbeddingIsSingleStorage) {
  auto vocab = letters(4);
  auto p = init_params<double>(small_config(), vocab, 2);
  EXPECT_EQ(&p.output_projection(), &p.embedding);
  IdMatrix ids(1, 1);
  ids(0, 0) = 2;
  const auto k = vocab.id("c");
  auto before = forward(p, ids, LMState<double>::zeros(p, 1)).logits[0];
  p.embedding.row(k).array() += 0.5;
  auto after = forward(p, ids, LMState<double>::zeros(p, 1)).logits[0];
  // Only token k's output logit moves; the input token differs from k.
  for (Eigen::Index v = 0; v < after.rows(); ++v) {
    if (v == k) EXPECT_NE(after(v, 0), before(v, 0));
    else EXPECT_EQ(after(v, 0), before(v, 0));
  }
  // Feeding k itself changes the hidden state as well.
  ids(0, 0) = k;
  auto via_input = forward(p, ids, LMState<double>::zeros(p, 1));
  p.embedding.row(k).array() -= 0.5;
  auto reverted = forward(p, ids, LMState<double>::zeros(p, 1));
  EXPECT_FALSE(via_input.state.h.back().isApprox(reverted.state.h.back()));
}

TEST(Forward, StateCarriesAcrossWindows) {
  auto vocab = letters(5);
  auto p = init_params<double>(small_config(), vocab, 4);
  IdMatrix all(6, 1);
  all << 2, 3, 4, 5, 6, 2;
  auto whole = forward(p, all, LMState<double>::zeros(p, 1));
  auto first = forward(p, IdMatrix(all.topRows(3)), LMState<double>::zeros(p, 1));
  auto second = forward(p, IdMatrix(all.bottomRows(3)), first.state);
  for (int t = 0; t < 3; ++t) EXPECT_TRUE(whole.logits[3 + t].isApprox(second.logits[t], 1e-12));
  EXPECT_THROW(forward(p, all, LMState<double>::zeros(p, 2)), ShapeMismatch);
  all(0, 0) = 99;
  EXPECT_THROW(forward(p, all, LMState<double>::zeros(p, 1)), InvalidArgument);
}

TEST(Loss, TrainingLossAgreesWithForwardPass) {
  auto vocab = letters(5);
  auto p = init_params<double>(small_config(), vocab, 5);
  IdMatrix in(4, 2), out(4, 2);
  in << 2, 3, 4, 5, 6, 2, 3, 4;
  out << 4, 5, 6, 2, 3, 4, 1, 1;
  auto state = LMState<double>::zeros(p, 2);
  auto grad = p.zeros_like();
  auto loss = loss_and_gradient(p, in, out, state, static_cast<const DropMasks<double>*>(nullptr), grad, 1.0);
  auto fwd = forward(p, in, LMState<double>::zeros(p, 2));
  double expect = 0.0;
  for (int t = 0; t < 4; ++t)
    for (int b = 0; b < 2; ++b) expect += -std::log(softmax(fwd.logits[t].col(b))(out(t, b)));
  EXPECT_NEAR(loss.total, expect, 1e-10);
  EXPECT_EQ(loss.tokens, 8u);
  EXPECT_TRUE(state.h.back().isApprox(fwd.state.h.back(), 1e-14));
}

TEST(GradientCheck, TiedDeepModel) {
  auto vocab = letters(8);
  auto r = gradient_check<long double>(small_config(true), vocab, seq_of({"a", "b", "c", "d", "e"}), 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-5) << r.worst_tensor << "[" << r.worst_index << "]";
  EXPECT_GT(r.checked, 500u);
}

TEST(GradientCheck, UntiedModelWithDropConnect) {
  auto vocab = letters(7);
  auto c = small_config(false);
  c.weight_drop = 0.4;
  auto r = gradient_check<long double>(c, vocab, seq_of({"g", "a", "b", "b", "c", "f"}), 1e-5);
  EXPECT_LT(r.max_relative_error, 1e-5) << r.worst_tensor << "[" << r.worst_index << "]";
}

TEST(GradientCheck, FilterRestrictsTensors) {
  auto vocab = letters(4);
  auto r = gradient_check<long double>(small_config(), vocab, seq_of({"a", "b"}), 1e-5,
                                       [](const std::string& n) { return n == "output.bias"; });
  EXPECT_EQ(r.checked, 6u);
}

TEST(Perplexity, UniformModelScoresVocabularySize) {
  auto vocab = letters(10);
  auto p = init_params<double>(small_config(), vocab, 1);
  p.for_each_tensor([](const std::string&, Matrix<double>& m) { m.setZero(); });
  auto s = seq_of({"a", "j", "c", "zz"});
  EXPECT_NEAR(perplexity(p, s), static_cast<double>(vocab.size()), 1e-9);
  EXPECT_THROW(perplexity(p, TokenSequence{}), InvalidArgument);
}

TEST(Perplexity, ScoresEveryTokenFromEosContext) {
  auto vocab = letters(3);
  auto s = seq_of({"a", "b"});
  EXPECT_EQ(scoring_ids(vocab, s), (std::vector<corpus::TokenId>{1, 2, 3, 1}));
}

TEST(Train, StreamAndBatchLayout) {
  auto vocab = letters(4);
  std::vector<TokenSequence> seqs{seq_of({"a", "b"}), TokenSequence{}, seq_of({"c"})};
  auto stream = build_stream(seqs, vocab);
  EXPECT_EQ(stream, (std::vector<corpus::TokenId>{1, 2, 3, 1, 4, 1}));
  auto m = batchify(stream, 2);
  ASSERT_EQ(m.rows(), 3);
  EXPECT_EQ(m(0, 0), 1);
  EXPECT_EQ(m(2, 0), 3);
  EXPECT_EQ(m(0, 1), 1);
  EXPECT_EQ(m(2, 1), 1);
}

TEST(Train, DeterministicForFixedSeed) {
  auto corpus = testkit::synthetic_corpus({.participants = 6});
  auto seqs = corpus.transcripts();
  auto vocab = corpus::build_vocab(seqs);
  auto cfg = testkit::tiny_lm_config();
  cfg.epochs = 3;
  cfg.weight_drop = 0.3;
  auto a = train<float>(seqs, cfg, vocab, init_params<float>(cfg, vocab, 11));
  auto b = train<float>(seqs, cfg, vocab, init_params<float>(cfg, vocab, 11));
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.report.epochs_run, 3);
  EXPECT_EQ(a.report.epoch_loss.size(), 3u);
  EXPECT_LT(a.report.epoch_loss.back(), a.report.epoch_loss.front());
}

TEST(Train, PlainSgdMatchesManualSteps) {
  auto vocab = letters(4);
  auto cfg = small_config();
  cfg.epochs = 1;
  cfg.batch_size = 1;
  cfg.bptt_window = 3;
  cfg.grad_clip = 0.0;
  std::vector<TokenSequence> seqs{seq_of({"a", "b", "c", "d", "a", "b"})};
  auto init = init_params<double>(cfg, vocab, 8);
  auto trained = train<double>(seqs, cfg, vocab, init);

  // Stream: eos a b c d a b eos (8 ids); windows of 3, 3 and 1 steps.
  auto stream = build_stream(seqs, vocab);
  auto p = init;
  auto state = LMState<double>::zeros(p, 1);
  for (auto [start, len] : {std::pair{0, 3}, std::pair{3, 3}, std::pair{6, 1}}) {
    IdMatrix in(len, 1), out(len, 1);
    for (int t = 0; t < len; ++t) {
      in(t, 0) = stream[static_cast<std::size_t>(start + t)];
      out(t, 0) = stream[static_cast<std::size_t>(start + t + 1)];
    }
    auto g = p.zeros_like();
    loss_and_gradient(p, in, out, state, static_cast<const DropMasks<double>*>(nullptr), g, 1.0 / len);
    std::vector<Matrix<double>*> gs;
    g.for_each_tensor([&](const std::string&, Matrix<double>& m) { gs.push_back(&m); });
    std::size_t k = 0;
    p.for_each_tensor([&](const std::string&, Matrix<double>& m) { m -= cfg.learning_rate * *gs[k++]; });
  }
  std::vector<const Matrix<double>*> got;
  trained.params.for_each_tensor([&](const std::string&, const Matrix<double>& m) { got.push_back(&m); });
  std::size_t k = 0;
  p.for_each_tensor([&](const std::string&, const Matrix<double>& m) { EXPECT_TRUE(m.isApprox(*got[k++], 1e-12)); });
}

TEST(Train, ClippingBoundsTheStep) {
  auto vocab = letters(4);
  auto cfg = small_config();
  cfg.epochs = 1;
  cfg.batch_size = 1;
  cfg.bptt_window = 7;
  cfg.grad_clip = 1e-3;
  cfg.learning_rate = 1.0;
  std::vector<TokenSequence> seqs{seq_of({"a", "b", "c", "d", "a", "b"})};
  auto init = init_params<double>(cfg, vocab, 8);
  auto trained = train<double>(seqs, cfg, vocab, init);
  double moved = 0.0;
  std::vector<const Matrix<double>*> a;
  init.for_each_tensor([&](const std::string&, const Matrix<double>& m) { a.push_back(&m); });
  std::size_t k = 0;
  trained.params.for_each_tensor(
      [&](const std::string&, const Matrix<double>& m) { moved += (m - *a[k++]).squaredNorm(); });
  EXPECT_NEAR(std::sqrt(moved), 1e-3, 1e-9);
}

TEST(Train, AsgdReturnsRunningAverage) {
  auto vocab = letters(4);
  auto cfg = small_config();
  cfg.epochs = 2;
  cfg.averaging = Averaging::asgd_after_epoch(1);
  std::vector<TokenSequence> seqs{seq_of({"a", "b", "c", "d", "a", "b", "c", "d", "a", "b", "c"})};
  auto init = init_params<double>(cfg, vocab, 8);
  auto averaged = train<double>(seqs, cfg, vocab, init);
  auto plain_cfg = cfg;
  plain_cfg.averaging = Averaging::none();
  auto plain = train<double>(seqs, plain_cfg, vocab, init);
  EXPECT_EQ(averaged.report, plain.report);
  EXPECT_FALSE(averaged.params == plain.params);
}

TEST(Train, RejectsTooSmallCorpusAndMismatchedVocabulary) {
  auto vocab = letters(4);
  auto cfg = small_config();
  cfg.batch_size = 20;
  std::vector<TokenSequence> seqs{seq_of({"a", "b"})};
  try {
    train<float>(seqs, cfg, vocab, init_params<float>(cfg, vocab, 1));
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("smaller batch size"), std::string::npos);
  }
  EXPECT_THROW(train<float>(seqs, small_config(), letters(5), init_params<float>(small_config(), vocab, 1)),
               ShapeMismatch);
}

TEST(Checkpoint, RoundTripAndErrorCodes) {
  auto vocab = letters(5);
  auto p = init_params<float>(small_config(false), vocab, 12);
  auto bytes = save_checkpoint(p);
  EXPECT_EQ(load_checkpoint(bytes), p);
  EXPECT_EQ(save_checkpoint(load_checkpoint(bytes)), bytes);

  auto code_of = [](std::vector<std::uint8_t> b) {
    try {
      load_checkpoint(b);
    } catch (const CheckpointError& e) {
      return e.code();
    }
    ADD_FAILURE() << "expected CheckpointError";
    return CheckpointError::Code::io;
  };
  using Code = CheckpointError::Code;
  auto b = bytes;
  b[0] = 'X';
  EXPECT_EQ(code_of(b), Code::not_a_checkpoint);
  b = bytes;
  b[4] = 2;
  EXPECT_EQ(code_of(b), Code::version_mismatch);
  b = bytes;
  b.resize(b.size() - 1);
  EXPECT_EQ(code_of(b), Code::truncated);
  b = bytes;
  b.push_back(0);
  EXPECT_EQ(code_of(b), Code::corrupt);
  b = bytes;
  b[20] = '[';
  EXPECT_EQ(code_of(b), Code::corrupt);
  // A single changed vocabulary letter still parses; the checksum catches it.
  b = bytes;
  const std::string text(b.begin(), b.end());
  b[text.find("\"a\"") + 1] = 'z';
  EXPECT_EQ(code_of(b), Code::corrupt);
  b = bytes;
  b.back() ^= 1;
  EXPECT_EQ(code_of(b), Code::corrupt);
}

TEST(Checkpoint, FileHelpers) {
  auto vocab = letters(3);
  auto p = init_params<float>(small_config(), vocab, 1);
  const std::string path = ::testing::TempDir() + "/model.pplm";
  save_checkpoint_file(p, path);
  EXPECT_EQ(load_checkpoint_file(path), p);
  try {
    load_checkpoint_file(path + ".missing");
    FAIL();
  } catch (const CheckpointError& e) {
    EXPECT_EQ(e.code(), CheckpointError::Code::io);
  }
}
