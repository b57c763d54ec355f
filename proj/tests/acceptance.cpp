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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Set PPLAB_DEMENTIABANK to a directory of .cha files to also run
// the corpus-scale check.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include "pplab/pplab.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace pplab;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

corpus::Vocabulary word_vocab(int total) {
  std::vector<std::string> t{corpus::Vocabulary::kUnk, corpus::Vocabulary::kEos};
  for (int i = 0; static_cast<int>(t.size()) < total; ++i) t.push_back("w" + std::to_string(i));
  return corpus::Vocabulary(t);
}

corpus::TokenSequence random_sequence(const corpus::Vocabulary& v, Rng& rng, int n) {
  corpus::TokenSequence s;
  for (int i = 0; i < n; ++i) s.tokens.push_back(v.token(static_cast<corpus::TokenId>(2 + rng() % (v.size() - 2))));
  s.utterance_ends = {s.tokens.size()};
  return s;
}

void gradient_check(Outcome& o) {
  const auto t0 = Clock::now();
  lm::LMConfig cfg;
  cfg.embedding_dim = 12;
  cfg.layer_dims = {12};
  cfg.bptt_window = 5;
  cfg.seed = 3;
  const auto vocab = word_vocab(20);
  Rng rng(4);
  const auto seq = random_sequence(vocab, rng, 8);
  const auto r = lm::gradient_check(cfg, vocab, seq, 1e-5);
  const double secs = seconds_since(t0);
  const auto plain = lm::gradient_check<double>(cfg, vocab, seq, 1e-5);
  o.detail << "max relative error " << r.max_relative_error << " over " << r.checked << " parameters, " << secs
           << " s; in plain double " << plain.max_relative_error << " (analytic " << plain.worst_analytic
           << " vs numeric " << plain.worst_numeric << ")";
  o.require(r.max_relative_error < 1e-4, "relative error < 1e-4");
  o.require(secs < 5.0, "runtime < 5 s");
}

void perplexity_identities(Outcome& o) {
  const auto t0 = Clock::now();
  const auto vocab = word_vocab(50);
  lm::LMConfig cfg = testkit::tiny_lm_config();
  auto uniform = lm::init_params<double>(cfg, vocab, 1);
  uniform.for_each_tensor([](const std::string&, lm::Matrix<double>& m) { m.setZero(); });
  Rng rng(5);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i)
    worst = std::max(worst, std::fabs(lm::perplexity(uniform, random_sequence(vocab, rng, 1 + i * 3)) - 50.0));
  o.detail << "uniform |PP - 50| " << worst;
  o.require(worst <= 1e-9, "uniform model PP = |V| within 1e-9");

  const auto sentence = corpus::preprocess_text("the boy takes a cookie from the jar");
  const std::vector<corpus::TokenSequence> repeated(10, sentence);
  const auto small = corpus::build_vocab(repeated);
  cfg.epochs = 200;
  cfg.batch_size = 1;
  cfg.weight_drop = 0.0;
  const auto trained = lm::train<float>(repeated, cfg, small, lm::init_params<float>(cfg, small, 6));
  const double pp = lm::perplexity(trained.params, sentence);
  const double secs = seconds_since(t0);
  o.detail << "; memorized sentence PP " << pp << " after 200 epochs, " << secs << " s";
  o.require(pp < 1.5, "memorization PP < 1.5");
  o.require(secs < 30.0, "runtime < 30 s");
}

void interpolation_identities(Outcome& o) {
  Rng rng(7);
  double worst_mid = 0.0;
  bool endpoints = true, self = true;
  for (int trial = 0; trial < 20; ++trial) {
    lm::LMConfig cfg;
    cfg.embedding_dim = 2 + static_cast<int>(rng() % 8);
    cfg.tie_embeddings = trial % 2 == 0;
    cfg.layer_dims = {3 + static_cast<int>(rng() % 5)};
    if (cfg.tie_embeddings) cfg.layer_dims.push_back(cfg.embedding_dim);
    const auto vocab = word_vocab(4 + static_cast<int>(rng() % 20));
    const auto dem = lm::init_params<double>(cfg, vocab, rng());
    const auto con = lm::init_params<double>(cfg, vocab, rng());
    using interrogation::InterpolationWeight;
    endpoints = endpoints && interrogation::interpolate(dem, con, InterpolationWeight(0.0)) == con &&
                interrogation::interpolate(dem, con, InterpolationWeight(1.0)) == dem;
    const auto mid = interrogation::interpolate(dem, con, InterpolationWeight(0.5));
    std::vector<const lm::Matrix<double>*> d, c;
    dem.for_each_tensor([&](const std::string&, const lm::Matrix<double>& m) { d.push_back(&m); });
    con.for_each_tensor([&](const std::string&, const lm::Matrix<double>& m) { c.push_back(&m); });
    std::size_t k = 0;
    mid.for_each_tensor([&](const std::string&, const lm::Matrix<double>& m) {
      worst_mid = std::max(worst_mid, (m - 0.5 * (*d[k] + *c[k])).cwiseAbs().maxCoeff());
      ++k;
    });
    for (double a : {0.1, 0.37, 0.5, 0.75, 0.999})
      self = self && interrogation::interpolate(dem, dem, InterpolationWeight(a)) == dem;
  }
  o.detail << "20 random model pairs; alpha=0.5 max deviation from mean " << worst_mid;
  o.require(endpoints, "alpha in {0,1} exact identity");
  o.require(worst_mid <= 1e-12, "alpha=0.5 entrywise mean within 1e-12");
  o.require(self, "interpolate(m, m, alpha) = m");
}

void classification_metrics(Outcome& o) {
  Rng rng(8);
  int auc_mismatch = 0, eer_mismatch = 0, invariance = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 49);
    std::vector<eval::LabeledScore> s;
    for (int i = 0; i < n; ++i) {
      const double v = trial % 2 ? static_cast<double>(rng() % 10) : uniform(rng, 0.0, 1.0);
      s.push_back({v, (rng() & 1) != 0});
    }
    s[0].positive = true;
    s[1].positive = false;
    const double a = eval::auc(s);
    auc_mismatch += a != testkit::brute_force_auc(s);
    const auto e = eval::acc_eer(s);
    const auto oracle = testkit::sweep_eer(s);
    eer_mismatch += e.accuracy != oracle.accuracy || e.threshold != oracle.threshold;
    auto t = s;
    for (auto& x : t) x.score = std::exp(x.score) * 3.0 - 2.0;
    invariance += eval::auc(t) != a;
  }
  o.detail << "200 random score sets; AUC mismatches " << auc_mismatch << ", ACC_eer mismatches " << eer_mismatch
           << ", transform changes " << invariance;
  o.require(auc_mismatch == 0, "AUC equals brute force");
  o.require(eer_mismatch == 0, "ACC_eer equals threshold sweep");
  o.require(invariance == 0, "AUC monotone-transform invariant");
}

void least_squares(Outcome& o) {
  Rng rng(9);
  double clean = 0.0, noisy = 0.0, ortho = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 25 + trial, k = 2 + trial % 5;
    Eigen::MatrixXd X(n, k);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j + 1 < k; ++j) X(i, j) = uniform(rng, -5.0, 5.0);
      X(i, k - 1) = 1.0;
    }
    Eigen::VectorXd beta(k);
    for (int j = 0; j < k; ++j) beta(j) = uniform(rng, -3.0, 3.0);
    Eigen::VectorXd y = X * beta;
    auto fit = lexstats::ols_fit(X, y);
    for (int j = 0; j < k; ++j)
      clean = std::max(clean, std::fabs(fit.coefficients[static_cast<std::size_t>(j)].estimate - beta(j)));
    for (int i = 0; i < n; ++i) y(i) += uniform(rng, -1.0, 1.0);
    fit = lexstats::ols_fit(X, y);
    const auto oracle = testkit::normal_equations(X, y);
    for (int j = 0; j < k; ++j)
      noisy = std::max(noisy, std::fabs(fit.coefficients[static_cast<std::size_t>(j)].estimate - oracle(j)));
    ortho = std::max(ortho, (X.transpose() * fit.residuals).cwiseAbs().maxCoeff() / (X.norm() * fit.residuals.norm()));
  }
  o.detail << "noiseless error " << clean << ", vs normal equations " << noisy << ", residual orthogonality " << ortho;
  o.require(clean <= 1e-10, "noiseless recovery to 1e-10");
  o.require(noisy <= 1e-8, "normal-equations agreement to 1e-8");
  o.require(ortho < 1e-8, "residual orthogonality < 1e-8");
}

void rank_correlation(Outcome& o) {
  const std::vector<double> x{1, 2, 3, 4, 5, 6}, up{0.1, 0.5, 2, 9, 10, 100}, down{9, 7, 5, 3, 1, -1};
  const auto plus = lexstats::spearman(x, up), minus = lexstats::spearman(x, down);
  // Average ranks [1, 2.5, 2.5, 4] against [1, 3, 2, 4], worked by hand.
  const std::vector<double> a{1, 2, 2, 4}, b{1, 3, 2, 4};
  const auto tied = lexstats::spearman(a, b);
  const double expected = 4.5 / std::sqrt(22.5);
  o.detail << "rho " << plus.value_or(NAN) << ", " << minus.value_or(NAN) << ", tie case " << tied.value_or(NAN);
  o.require(plus == 1.0 && minus == -1.0, "+/-1 on monotone data");
  o.require(tied && std::fabs(*tied - expected) <= 1e-12, "tie case within 1e-12");
}

struct SyntheticRun {
  std::map<std::string, std::pair<lm::LMParameters, lm::LMParameters>> models;  // held out -> (con, dem)
  eval::EvaluationReport report;
  double seconds = 0.0;
};

SyntheticRun run_synthetic() {
  SyntheticRun run;
  const auto t0 = Clock::now();
  eval::RunConfig cfg;
  cfg.lm = testkit::tiny_lm_config();
  cfg.jobs = 0;
  std::mutex mu;
  run.report = eval::run_loocv(testkit::synthetic_corpus(), cfg, [&](const eval::FoldModels& f) {
    std::lock_guard lock(mu);
    run.models.emplace(f.held_out, std::make_pair(f.con, f.dem));
  });
  run.seconds = seconds_since(t0);
  return run;
}

void synthetic_loocv(Outcome& o, const SyntheticRun& run) {
  const auto& r = run.report;
  o.detail << "AUC diff " << r.auc_diff.mean << ", P_con " << r.auc_con.mean << ", P_dem " << r.auc_model.mean
           << ", ACC_eer " << r.acc_eer_diff.mean << ", " << run.seconds << " s";
  o.require(r.auc_diff.mean > std::max(r.auc_con.mean, r.auc_model.mean), "AUC(diff) beats both single models");
  o.require(r.auc_diff.mean >= 0.85, "AUC(diff) >= 0.85");
  o.require(run.seconds < 300.0, "runtime < 5 min");
}

void perturbation_curve(Outcome& o, const SyntheticRun& run) {
  std::vector<interrogation::ModelPair<float>> pairs;
  for (auto& [id, m] : run.models) pairs.push_back({&m.first, &m.second});
  const auto variants =
      interrogation::generate_variants(testkit::synthetic_narrative(), testkit::synthetic_substitutions());
  const std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
  const auto curve = interrogation::interrogate<float>(pairs, alphas, variants);
  std::vector<double> rank, p_con;
  bool increasing = true;
  for (auto band : interrogation::kAllBands) {
    rank.push_back(interrogation::severity(band));
    p_con.push_back(curve.at(0.0, band).mean_perplexity);
    if (p_con.size() > 1) increasing = increasing && p_con.back() > p_con[p_con.size() - 2];
  }
  const auto rho = lexstats::spearman(rank, p_con);
  const auto top = interrogation::kAllBands.back();
  const double at0 = curve.at(0.0, top).mean_px_minus_po, at75 = curve.at(0.75, top).mean_px_minus_po;
  o.detail << "P_con by band";
  for (double p : p_con) o.detail << " " << p;
  o.detail << "; rho " << rho.value_or(NAN) << "; top-band Px-Po alpha=0 " << at0 << ", alpha=0.75 " << at75;
  o.require(increasing, "P_con strictly increasing");
  o.require(rho && *rho > 0.9, "rho > 0.9");
  o.require(at75 <= at0, "alpha=0.75 at or below alpha=0 at top band");
}

void checkpoints(Outcome& o) {
  Rng rng(10);
  int mismatches = 0, fuzz_cases = 0, unclean = 0;
  for (int trial = 0; trial < 50; ++trial) {
    lm::LMConfig cfg;
    cfg.embedding_dim = 1 + static_cast<int>(rng() % 12);
    cfg.tie_embeddings = rng() % 2 == 0;
    cfg.layer_dims.clear();
    for (int l = 0, n = 1 + static_cast<int>(rng() % 3); l < n; ++l) cfg.layer_dims.push_back(1 + static_cast<int>(rng() % 12));
    if (cfg.tie_embeddings) cfg.layer_dims.back() = cfg.embedding_dim;
    cfg.weight_drop = uniform(rng, 0.0, 0.9);
    cfg.learning_rate = uniform(rng, 0.1, 30.0);
    cfg.seed = rng();
    auto p = lm::init_params<float>(cfg, word_vocab(3 + static_cast<int>(rng() % 40)), rng());
    p.output_bias.setRandom();
    const auto bytes = lm::save_checkpoint(p);
    const auto back = lm::load_checkpoint(bytes);
    mismatches += !(back == p) || lm::save_checkpoint(back) != bytes;

    const std::uint64_t header_end = 20 + static_cast<std::uint64_t>(bytes[8]) + (static_cast<std::uint64_t>(bytes[9]) << 8) +
                                     (static_cast<std::uint64_t>(bytes[10]) << 16);
    for (int f = 0; f < 40; ++f) {
      auto b = bytes;
      switch (f % 4) {
        case 0:
        case 1:
          b[rng() % header_end] ^= static_cast<std::uint8_t>(1 + rng() % 255);
          break;
        case 2:
          b.resize(rng() % header_end);
          break;
        case 3:
          b.insert(b.begin() + static_cast<std::ptrdiff_t>(rng() % header_end), static_cast<std::uint8_t>(rng()));
          break;
      }
      ++fuzz_cases;
      try {
        lm::load_checkpoint(b);
        ++unclean;
      } catch (const lm::CheckpointError&) {
      } catch (...) {
        ++unclean;
      }
    }
  }
  o.detail << "50 random models, " << mismatches << " roundtrip mismatches; " << fuzz_cases
           << " corrupted headers, " << unclean << " not rejected with a checkpoint error";
  o.require(mismatches == 0, "bit-exact roundtrip");
  o.require(unclean == 0, "corrupted headers error cleanly");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void golden_files(Outcome& o) {
  int files = 0, matched = 0;
  for (const auto& e : fs::directory_iterator(fs::path(PPLAB_TEST_DATA) / "chat")) {
    if (e.path().extension() != ".cha") continue;
    ++files;
    const auto seq = corpus::preprocess(corpus::parse_chat(slurp(e.path()), e.path().filename().string()));
    std::ostringstream got;
    std::size_t start = 0;
    for (auto end : seq.utterance_ends) {
      for (auto i = start; i < end; ++i) got << (i > start ? " " : "") << seq.tokens[i];
      got << "\n";
      start = end;
    }
    matched += got.str() == slurp(fs::path(e.path()).replace_extension(".expected"));
  }
  o.detail << matched << " of " << files << " fixtures match";
  o.require(files == 10 && matched == files, "all 10 fixtures exact");
}

bool report(int id, const std::string& name, const std::function<void(Outcome&)>& body) {
  Outcome o;
  try {
    body(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  std::cout << (o.pass ? "PASS" : "FAIL") << "  " << std::setw(2) << id << "  " << name << ": " << o.detail.str()
            << std::endl;
  return o.pass;
}

void dementiabank(const char* dir) {
  auto loaded = corpus::read_chat_directory(dir);
  corpus::MetadataTable sidecar;
  if (const char* meta = std::getenv("PPLAB_DEMENTIABANK_METADATA")) {
    std::ifstream in(meta);
    sidecar = corpus::read_metadata_csv(in);
  }
  const auto c = corpus::build_corpus(loaded.transcripts, sidecar, {});
  eval::RunConfig cfg;
  cfg.jobs = 0;
  const auto base = eval::run_loocv(c, cfg);
  std::cout << "DementiaBank baseline AUC(diff) " << base.auc_diff.mean << "\n";
  if (const char* emb = std::getenv("PPLAB_PRETRAINED")) {
    cfg.alpha = 0.75;
    cfg.pretrained_embeddings = emb;
    cfg.lm.learning_rate = 5.0;
    const auto best = eval::run_loocv(c, cfg);
    std::cout << "DementiaBank alpha=0.75 + pretrained AUC(diff) " << best.auc_diff.mean << "\n";
    if (best.auc_diff.mean < base.auc_diff.mean) throw Error("interpolated configuration below baseline");
  }
  if (base.auc_diff.mean < 0.89 || base.auc_diff.mean > 0.95) throw Error("baseline AUC(diff) outside 0.89-0.95");
}

}  // namespace

int main() {
  std::cout << std::setprecision(6);
  bool ok = true;
  ok &= report(1, "gradient check", gradient_check);
  ok &= report(2, "perplexity identities", perplexity_identities);
  ok &= report(3, "interpolation identities", interpolation_identities);
  ok &= report(4, "AUC and ACC_eer oracles", classification_metrics);
  ok &= report(5, "least squares", least_squares);
  ok &= report(6, "Spearman correlation", rank_correlation);
  SyntheticRun run;
  ok &= report(7, "synthetic LOOCV", [&](Outcome& o) {
    run = run_synthetic();
    synthetic_loocv(o, run);
  });
  ok &= report(8, "perturbation curve", [&](Outcome& o) { perturbation_curve(o, run); });
  ok &= report(9, "checkpoint roundtrip and fuzz", checkpoints);
  ok &= report(10, "CHAT golden files", golden_files);

  if (const char* dir = std::getenv("PPLAB_DEMENTIABANK")) {
    ok &= report(11, "DementiaBank integration", [&](Outcome& o) {
      dementiabank(dir);
      o.detail << "corpus at " << dir;
    });
  } else {
    std::cout << "SKIP  --  DementiaBank integration: PPLAB_DEMENTIABANK not set" << std::endl;
  }
  return ok ? 0 : 1;
}
