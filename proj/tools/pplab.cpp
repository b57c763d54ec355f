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

// pplab command-line tool.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "pplab/pplab.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace pplab;

namespace {

// ---------------------------------------------------------------------------
// Files

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  return in;
}

void write_file(const fs::path& p, const std::string& content) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out || !(out << content) || !out.flush()) throw Error("cannot write " + p.string());
}

void write_json(const fs::path& p, const Json& j) { write_file(p, j.dump(2) + "\n"); }

corpus::Corpus load_corpus(const fs::path& p) {
  auto in = open_input(p);
  return corpus::read_jsonl(in);
}

Json read_json_file(const fs::path& p) {
  try {
    return Json::parse(read_file(p));
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(p.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Provenance

struct Invocation {
  std::string command;
  std::vector<std::string> arguments;
};

Json manifest(const Invocation& inv, const Json& config, const Json& outputs) {
  Json j;
  j["tool"] = "pplab";
  j["version"] = kVersion;
  j["command"] = inv.command;
  j["arguments"] = inv.arguments;
  j["config"] = config;
  j["outputs"] = outputs;
  return j;
}

// ---------------------------------------------------------------------------
// Configuration: defaults, then --config, then explicit flags.

struct LmFlags {
  std::optional<int> embedding_dim, batch_size, bptt_window, epochs;
  std::vector<int> layer_dims;
  std::optional<bool> tie_embeddings;
  std::optional<double> weight_drop, learning_rate, grad_clip;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> averaging;

  void add(CLI::App& app) {
    app.add_option("--embedding-dim", embedding_dim, "Embedding dimension");
    app.add_option("--layers", layer_dims, "LSTM layer sizes, comma separated")->delimiter(',');
    app.add_option("--tie-embeddings", tie_embeddings, "Share input and output embeddings (true/false)");
    app.add_option("--weight-drop", weight_drop, "DropConnect rate on recurrent weights");
    app.add_option("--batch-size", batch_size, "Parallel streams per batch");
    app.add_option("--bptt", bptt_window, "Truncated backpropagation window");
    app.add_option("--epochs", epochs, "Training epochs");
    app.add_option("--lr", learning_rate, "Learning rate (default 20, or 5 with --pretrained)");
    app.add_option("--clip", grad_clip, "Global gradient norm clip; <= 0 disables");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--averaging", averaging, "none or asgd:K");
  }

  void apply(lm::LMConfig& c) const {
    if (embedding_dim) c.embedding_dim = *embedding_dim;
    if (!layer_dims.empty()) c.layer_dims = layer_dims;
    if (tie_embeddings) c.tie_embeddings = *tie_embeddings;
    if (weight_drop) c.weight_drop = *weight_drop;
    if (batch_size) c.batch_size = *batch_size;
    if (bptt_window) c.bptt_window = *bptt_window;
    if (epochs) c.epochs = *epochs;
    if (learning_rate) c.learning_rate = *learning_rate;
    if (grad_clip) c.grad_clip = *grad_clip;
    if (seed) c.seed = *seed;
    if (averaging) c.averaging = lm::Averaging::parse(*averaging);
  }
};

struct RunFlags {
  std::optional<std::string> config_file;
  LmFlags lm;
  std::optional<std::string> pretrained;
  std::optional<int> min_count, jobs;

  void add(CLI::App& app) {
    app.add_option("--config", config_file, "JSON configuration file; explicit flags take precedence")
        ->check(CLI::ExistingFile);
    lm.add(app);
    app.add_option("--pretrained", pretrained, "Pre-trained embedding file")->check(CLI::ExistingFile);
    app.add_option("--min-count", min_count, "Minimum token count for the vocabulary");
    app.add_option("--jobs", jobs, "Worker threads (0 = all cores); falls back to PPLAB_JOBS");
  }

  /// Resolves the effective configuration. `extra` receives config-file
  /// keys that are not run settings.
  eval::RunConfig resolve(Json* extra = nullptr) const {
    eval::RunConfig cfg;
    cfg.jobs = 0;
    bool lr_given = learning_rate_given();
    if (config_file) {
      Json j = read_json_file(*config_file);
      if (!j.is_object()) throw InvalidArgument(*config_file + ": configuration must be a JSON object");
      for (const char* key : {"screening_mmse", "severity_mmse", "alphas"}) {
        if (j.contains(key)) {
          if (extra) (*extra)[key] = j[key];
          j.erase(key);
        }
      }
      if (j.contains("lm") && j["lm"].is_object() && j["lm"].contains("learning_rate")) lr_given = true;
      eval::update_from_json(cfg, j);
    }
    lm.apply(cfg.lm);
    if (pretrained) cfg.pretrained_embeddings = *pretrained;
    if (min_count) cfg.min_count = *min_count;
    if (jobs) {
      cfg.jobs = *jobs;
    } else if (const char* env = std::getenv("PPLAB_JOBS")) {
      try {
        cfg.jobs = std::stoi(env);
      } catch (const std::exception&) {
        throw InvalidArgument(std::string("PPLAB_JOBS must be an integer, got '") + env + "'");
      }
    }
    if (cfg.pretrained_embeddings && !lr_given) cfg.lm.learning_rate = 5.0;
    if (cfg.jobs < 0) throw InvalidArgument("jobs must be >= 0");
    return cfg;
  }

  bool learning_rate_given() const { return lm.learning_rate.has_value(); }
};

std::optional<lm::EmbeddingTable> load_pretrained(const eval::RunConfig& cfg) {
  if (!cfg.pretrained_embeddings) return std::nullopt;
  return lm::load_embeddings(*cfg.pretrained_embeddings);
}

// ---------------------------------------------------------------------------
// preprocess

struct PreprocessArgs {
  std::string chat_dir, out;
  std::optional<std::string> metadata;
  bool strict = false;
  bool no_eos = false;
};

int cmd_preprocess(const PreprocessArgs& a, const Invocation& inv) {
  auto dir = corpus::read_chat_directory(a.chat_dir);
  corpus::MetadataTable sidecar;
  if (a.metadata) {
    auto in = open_input(*a.metadata);
    sidecar = corpus::read_metadata_csv(in);
  }
  corpus::PreprocessConfig pcfg;
  pcfg.append_eos = !a.no_eos;
  corpus::BuildSummary summary;
  const auto c = corpus::build_corpus(dir.transcripts, sidecar, pcfg, &summary);

  for (const auto& [path, why] : dir.failures) std::cerr << "unreadable: " << path << ": " << why << "\n";
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << "\n";
  std::cerr << "files parsed " << dir.transcripts.size() << ", failed " << dir.failures.size() << "; participants "
            << c.size() << " (dementia " << c.count(corpus::Group::dementia) << ", control "
            << c.count(corpus::Group::control) << "); transcripts " << c.transcript_count() << "\n";
  if (dir.transcripts.empty()) throw Error("no parsable .cha files in " + a.chat_dir);

  std::ostringstream os;
  corpus::write_jsonl(c, os);
  write_file(a.out, os.str());
  Json config{{"chat_dir", a.chat_dir},
              {"metadata", a.metadata ? Json(*a.metadata) : Json(nullptr)},
              {"append_eos", pcfg.append_eos},
              {"fillers", pcfg.fillers},
              {"noise", pcfg.noise}};
  Json counts{{"files_parsed", dir.transcripts.size()},
              {"files_failed", dir.failures.size()},
              {"participants", c.size()},
              {"dementia", c.count(corpus::Group::dementia)},
              {"control", c.count(corpus::Group::control)},
              {"transcripts", c.transcript_count()},
              {"empty_transcripts", summary.empty_transcripts},
              {"ungrouped_transcripts", summary.ungrouped_transcripts}};
  auto m = manifest(inv, config, Json::array({a.out}));
  m["counts"] = counts;
  m["warnings"] = summary.warnings;
  write_json(a.out + ".manifest.json", m);
  return a.strict && !dir.failures.empty() ? 1 : 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string corpus, group, out;
  RunFlags run;
};

int cmd_train(const TrainArgs& a, const Invocation& inv) {
  const auto cfg = a.run.resolve();
  cfg.lm.validate();
  const auto group = corpus::parse_group(a.group);
  if (!group) throw InvalidArgument("--group must be dementia or control, got '" + a.group + "'");
  const auto c = load_corpus(a.corpus);
  const auto table = load_pretrained(cfg);
  const auto result =
      eval::train_group_model(c, *group, cfg.lm, cfg.min_count, cfg.lm.seed, table ? &*table : nullptr);
  lm::save_checkpoint_file(result.params, a.out);

  auto config = eval::to_json(cfg);
  config.erase("alpha");
  config.erase("repetitions");
  config.erase("seeds");
  Json report = manifest(inv, config, Json::array({a.out}));
  report["corpus"] = a.corpus;
  report["group"] = corpus::to_string(*group);
  report["seed"] = cfg.lm.seed;
  report["vocabulary_size"] = result.params.vocab.size();
  report["epoch_loss"] = result.report.epoch_loss;
  report["final_loss"] = result.report.final_loss;
  report["epochs_run"] = result.report.epochs_run;
  write_json(a.out + ".report.json", report);
  std::cerr << "trained " << a.group << " model: final loss " << result.report.final_loss << ", vocabulary "
            << result.params.vocab.size() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// loocv

struct LoocvArgs {
  std::string corpus, out_dir;
  RunFlags run;
  std::optional<double> alpha;
  std::optional<int> repetitions;
  std::vector<std::uint64_t> seeds;
  std::optional<int> screening_mmse;
  std::optional<int> severity_mmse;
};

int cmd_loocv(const LoocvArgs& a, const Invocation& inv) {
  Json extra = Json::object();
  auto cfg = a.run.resolve(&extra);
  const bool seeds_from_config = a.run.config_file && read_json_file(*a.run.config_file).contains("seeds");
  if (a.alpha) cfg.alpha = *a.alpha;
  if (a.repetitions) cfg.repetitions = *a.repetitions;
  if (!a.seeds.empty()) {
    cfg.seeds = a.seeds;
  } else if (!seeds_from_config) {
    cfg.seeds.clear();
    for (int i = 0; i < cfg.repetitions; ++i) cfg.seeds.push_back(cfg.lm.seed + static_cast<std::uint64_t>(i));
  }
  std::optional<int> screening = a.screening_mmse;
  if (!screening && extra.contains("screening_mmse")) screening = extra["screening_mmse"].get<int>();
  int severity = a.severity_mmse.value_or(extra.value("severity_mmse", 10));
  cfg.validate();

  const auto c = load_corpus(a.corpus);
  std::cerr << "LOOCV over " << c.size() << " participants, " << cfg.repetitions << " repetition(s)\n";
  const auto report = eval::run_loocv(c, cfg);

  const fs::path dir(a.out_dir);
  std::ostringstream scores, summary;
  eval::write_scores_csv(report, scores);
  eval::write_summary_csv(report, summary);
  write_file(dir / "scores.csv", scores.str());
  write_file(dir / "summary.csv", summary.str());
  Json outputs = Json::array({"scores.csv", "summary.csv", "report.json"});

  auto config = eval::to_json(cfg);
  config["screening_mmse"] = screening ? Json(*screening) : Json(nullptr);
  config["severity_mmse"] = severity;
  Json j = manifest(inv, config, outputs);
  j["corpus"] = a.corpus;
  j["evaluation"] = eval::to_json(report);
  j["severity"] = eval::to_json(eval::severity_perplexity_summary(c, report, severity));
  if (screening) {
    const auto s = eval::screening_subset(c, report, *screening);
    j["screening"] = eval::to_json(s);
    std::ostringstream ss;
    eval::write_summary_csv(s.report, ss);
    write_file(dir / "screening.csv", ss.str());
    j["outputs"].push_back("screening.csv");
  }
  write_json(dir / "report.json", j);

  std::cerr << "AUC(diff) " << report.auc_diff.mean << ", AUC(P_con) " << report.auc_con.mean << ", AUC(P_model) "
            << report.auc_model.mean << ", ACC_eer(diff) " << report.acc_eer_diff.mean << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// interrogate

std::vector<interrogation::Variant> narratives_from_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InvalidArgument("not a directory: " + dir.string());
  std::vector<interrogation::Variant> out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".txt") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const auto band = interrogation::parse_band(f.stem().string());
    if (!band)
      throw InvalidArgument("narrative file " + f.filename().string() +
                            " is not named after a band (baseline, 0.5-1.0, ..., 2.5-3.0)");
    auto seq = corpus::preprocess_text(read_file(f));
    seq.participant_id = std::string(interrogation::label(*band));
    out.push_back({*band, std::move(seq)});
  }
  std::sort(out.begin(), out.end(), [](auto& x, auto& y) { return x.band < y.band; });
  return out;
}

struct InterrogateArgs {
  std::vector<std::string> pairs;
  std::optional<std::string> corpus;
  std::optional<std::string> narratives_dir, narrative, substitutions;
  std::vector<double> alphas;
  std::optional<int> repetitions;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  RunFlags run;
};

int cmd_interrogate(const InterrogateArgs& a, const Invocation& inv) {
  Json extra = Json::object();
  auto cfg = a.run.resolve(&extra);
  std::vector<double> alphas = a.alphas;
  if (alphas.empty()) alphas = extra.contains("alphas") ? extra["alphas"].get<std::vector<double>>()
                                                        : std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0};
  for (double x : alphas) interrogation::InterpolationWeight{x};

  std::vector<interrogation::Variant> variants;
  Json narrative_source;
  if (a.narratives_dir) {
    variants = narratives_from_dir(*a.narratives_dir);
    narrative_source = {{"narratives", *a.narratives_dir}};
  } else {
    auto base = corpus::preprocess_text(read_file(*a.narrative));
    base.participant_id = "baseline";
    auto in = open_input(*a.substitutions);
    variants = interrogation::generate_variants(base, interrogation::read_substitution_csv(in));
    narrative_source = {{"narrative", *a.narrative}, {"substitutions", *a.substitutions}};
  }

  std::vector<lm::LMParameters> models;
  Json model_source;
  if (!a.pairs.empty()) {
    if (a.pairs.size() % 2) throw InvalidArgument("--pair needs a control and a dementia checkpoint");
    for (const auto& p : a.pairs) models.push_back(lm::load_checkpoint_file(p));
    model_source = {{"checkpoints", a.pairs}};
  } else {
    if (a.repetitions) cfg.repetitions = *a.repetitions;
    if (!a.seeds.empty()) {
      cfg.seeds = a.seeds;
    } else {
      cfg.seeds.clear();
      for (int i = 0; i < cfg.repetitions; ++i) cfg.seeds.push_back(cfg.lm.seed + static_cast<std::uint64_t>(i));
    }
    cfg.validate();
    const auto c = load_corpus(*a.corpus);
    const auto table = load_pretrained(cfg);
    for (auto seed : cfg.seeds) {
      std::cerr << "training twin models, seed " << seed << "\n";
      auto twins = eval::train_twins(c, cfg.lm, cfg.min_count, seed, table ? &*table : nullptr);
      models.push_back(std::move(twins.con));
      models.push_back(std::move(twins.dem));
    }
    model_source = {{"corpus", *a.corpus}, {"run", eval::to_json(cfg)}};
  }
  std::vector<interrogation::ModelPair<float>> pairs;
  for (std::size_t i = 0; i < models.size(); i += 2) pairs.push_back({&models[i], &models[i + 1]});

  const auto curve = interrogation::interrogate<float>(pairs, alphas, variants);
  const fs::path dir(a.out_dir);
  std::ostringstream elevation, per_pair, perplexity;
  interrogation::write_curve_csv(curve, elevation);
  interrogation::write_pair_curve_csv(curve, per_pair);
  interrogation::write_perplexity_csv(curve, perplexity);
  write_file(dir / "curve.csv", elevation.str());
  write_file(dir / "curve_pairs.csv", per_pair.str());
  write_file(dir / "perplexity.csv", perplexity.str());
  Json config{{"alphas", alphas}, {"models", model_source}, {"narratives", narrative_source}};
  write_json(dir / "manifest.json", manifest(inv, config, Json::array({"curve.csv", "curve_pairs.csv", "perplexity.csv"})));
  std::cerr << "wrote " << curve.points.size() << " curve points\n";
  return 0;
}

// ---------------------------------------------------------------------------
// lexfreq

struct LexfreqArgs {
  std::string lexicon, out_dir;
  std::optional<std::string> corpus, narratives_dir, pos_jsonl, nouns, verbs, scores;
};

int cmd_lexfreq(const LexfreqArgs& a, const Invocation& inv) {
  auto lin = open_input(a.lexicon);
  const auto lex = lexstats::read_lexicon_tsv(lin);
  std::unique_ptr<lexstats::PosSource> pos;
  if (a.pos_jsonl) {
    auto in = open_input(*a.pos_jsonl);
    pos = std::make_unique<lexstats::SidecarPos>(lexstats::read_pos_jsonl(in));
  } else {
    auto n = open_input(*a.nouns);
    auto v = open_input(*a.verbs);
    pos = std::make_unique<lexstats::WordlistPos>(lexstats::read_wordlist(n), lexstats::read_wordlist(v));
  }
  auto cell = [](std::optional<double> x) { return x ? csv::format_number(*x) : std::string(); };

  const fs::path dir(a.out_dir);
  Json report = manifest(inv,
                         {{"lexicon", a.lexicon},
                          {"pos", a.pos_jsonl ? Json{{"sidecar", *a.pos_jsonl}}
                                              : Json{{"nouns", *a.nouns}, {"verbs", *a.verbs}}},
                          {"corpus", a.corpus ? Json(*a.corpus) : Json(nullptr)},
                          {"narratives", a.narratives_dir ? Json(*a.narratives_dir) : Json(nullptr)},
                          {"scores", a.scores ? Json(*a.scores) : Json(nullptr)}},
                         Json::array());

  if (a.narratives_dir) {
    const auto variants = narratives_from_dir(*a.narratives_dir);
    std::ostringstream os;
    csv::write_row(os, {"band", "mean_log10_frequency"});
    std::vector<double> rank, freq;
    Json rows = Json::array();
    for (const auto& v : variants) {
      const auto m = lexstats::mean_log_lexical_frequency(v.narrative, pos->tag(v.narrative), lex);
      csv::write_row(os, {std::string(interrogation::label(v.band)), cell(m)});
      rows.push_back({{"band", interrogation::label(v.band)}, {"mean_log10_frequency", m ? Json(*m) : Json(nullptr)}});
      if (m) {
        rank.push_back(interrogation::severity(v.band));
        freq.push_back(*m);
      }
    }
    write_file(dir / "narratives.csv", os.str());
    report["outputs"].push_back("narratives.csv");
    const auto rho = rank.size() >= 2 ? lexstats::spearman(rank, freq) : std::nullopt;
    report["narratives"] = {{"bands", rows}, {"spearman_vs_band", rho ? Json(*rho) : Json(nullptr)}};
  }

  if (a.corpus) {
    const auto c = load_corpus(*a.corpus);
    std::ostringstream os;
    csv::write_row(os, {"participant_id", "visit", "group", "mean_log10_frequency"});
    for (const auto& p : c.participants())
      for (const auto& t : p.transcripts)
        csv::write_row(os, {p.participant_id, std::to_string(t.visit), std::string(corpus::to_string(p.group)),
                            cell(lexstats::mean_log_lexical_frequency(t, pos->tag(t), lex))});
    write_file(dir / "frequencies.csv", os.str());
    report["outputs"].push_back("frequencies.csv");
    if (a.scores) {
      auto in = open_input(*a.scores);
      const auto scores = eval::read_scores_csv(in);
      const auto ds = lexstats::regression_dataset(c, scores, lex, *pos);
      const auto fit = lexstats::ols_fit(ds.X, ds.y, lexstats::RegressionDataset::kColumns);
      report["regression"] = lexstats::regression_report(ds, fit);
    }
  }
  report["outputs"].push_back("report.json");
  write_json(dir / "report.json", report);
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  RunFlags run;
  int vocab_size = 20;
  int length = 8;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::string precision = "extended";
};

int cmd_gradcheck(const GradcheckArgs& a, const Invocation& inv) {
  auto cfg = a.run.resolve();
  if (!a.run.lm.embedding_dim && !a.run.config_file) cfg.lm.embedding_dim = 12;
  if (a.run.lm.layer_dims.empty() && !a.run.config_file) cfg.lm.layer_dims = {12};
  if (!a.run.lm.bptt_window && !a.run.config_file) cfg.lm.bptt_window = 5;
  cfg.lm.validate();
  if (a.vocab_size < 3) throw InvalidArgument("--vocab-size must be >= 3");
  if (a.length < 1) throw InvalidArgument("--length must be >= 1");

  std::vector<std::string> tokens{corpus::Vocabulary::kUnk, corpus::Vocabulary::kEos};
  for (int i = 2; i < a.vocab_size; ++i) tokens.push_back("w" + std::to_string(i));
  const corpus::Vocabulary vocab(tokens);
  Rng rng(mix_seed(cfg.lm.seed, 17));
  corpus::TokenSequence seq;
  for (int i = 0; i < a.length; ++i) seq.tokens.push_back(tokens[2 + rng() % (tokens.size() - 2)]);
  seq.utterance_ends = {seq.tokens.size()};

  lm::GradientCheckResult r;
  if (a.precision == "extended") r = lm::gradient_check<long double>(cfg.lm, vocab, seq, a.epsilon);
  else if (a.precision == "double") r = lm::gradient_check<double>(cfg.lm, vocab, seq, a.epsilon);
  else throw InvalidArgument("--precision must be extended or double");

  Json out = manifest(inv, {{"lm", cfg.lm}, {"vocab_size", a.vocab_size}, {"length", a.length},
                            {"epsilon", a.epsilon}, {"precision", a.precision}, {"tolerance", a.tolerance}},
                      Json::array());
  out.erase("outputs");
  out["max_relative_error"] = r.max_relative_error;
  out["parameters_checked"] = r.checked;
  out["worst"] = {{"tensor", r.worst_tensor},
                  {"index", r.worst_index},
                  {"analytic", r.worst_analytic},
                  {"numeric", r.worst_numeric}};
  out["pass"] = r.max_relative_error < a.tolerance;
  std::cout << out.dump(2) << "\n";
  return r.max_relative_error < a.tolerance ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pplab: paired-perplexity language models for transcript analysis"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Parse a directory of CHAT files into a JSON-lines corpus");
  p->add_option("chat_dir", pre.chat_dir, "Directory of .cha files")->required()->check(CLI::ExistingDirectory);
  p->add_option("-o,--out", pre.out, "Output corpus (.jsonl)")->required();
  p->add_option("--metadata", pre.metadata, "Sidecar CSV participant_id,group,age,education,visit,mmse")
      ->check(CLI::ExistingFile);
  p->add_flag("--strict", pre.strict, "Exit nonzero if any file fails to parse");
  p->add_flag("--no-eos", pre.no_eos, "Do not mark utterance boundaries");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one group's language model");
  t->add_option("--corpus", tr.corpus, "Corpus (.jsonl)")->required()->check(CLI::ExistingFile);
  t->add_option("--group", tr.group, "dementia or control")->required();
  t->add_option("-o,--out", tr.out, "Output checkpoint")->required();
  tr.run.add(*t);

  LoocvArgs lv;
  auto* l = app.add_subcommand("loocv", "Leave-one-participant-out evaluation");
  l->add_option("--corpus", lv.corpus, "Corpus (.jsonl)")->required()->check(CLI::ExistingFile);
  l->add_option("-o,--out", lv.out_dir, "Output directory")->required();
  lv.run.add(*l);
  l->add_option("--alpha", lv.alpha, "Interpolate the dementia model toward the control model");
  l->add_option("--repetitions", lv.repetitions, "Number of repetitions");
  l->add_option("--seeds", lv.seeds, "One seed per repetition, comma separated")->delimiter(',');
  l->add_option("--screening-mmse", lv.screening_mmse, "Also report participants with last MMSE >= this");
  l->add_option("--severity-mmse", lv.severity_mmse, "MMSE ceiling of the severe subset (default 10)");

  InterrogateArgs in;
  auto* g = app.add_subcommand("interrogate", "Perplexity of perturbed narratives under interpolated models");
  auto* pair_opt = g->add_option("--pair", in.pairs, "Control and dementia checkpoints, comma separated")
                       ->delimiter(',')
                       ->check(CLI::ExistingFile);
  auto* corpus_opt = g->add_option("--corpus", in.corpus, "Train twin models on this corpus instead")
                         ->check(CLI::ExistingFile);
  pair_opt->excludes(corpus_opt);
  auto* dir_opt = g->add_option("--narratives", in.narratives_dir, "Directory of <band>.txt narratives")
                      ->check(CLI::ExistingDirectory);
  auto* base_opt = g->add_option("--narrative", in.narrative, "Baseline narrative text")->check(CLI::ExistingFile);
  auto* subs_opt = g->add_option("--substitutions", in.substitutions, "Substitution CSV")->check(CLI::ExistingFile);
  dir_opt->excludes(base_opt)->excludes(subs_opt);
  base_opt->needs(subs_opt);
  subs_opt->needs(base_opt);
  g->add_option("--alphas", in.alphas, "Interpolation weights (default 0,0.25,0.5,0.75,1)")->delimiter(',');
  g->add_option("--repetitions", in.repetitions, "Model pairs to train with --corpus");
  g->add_option("--seeds", in.seeds, "One seed per pair with --corpus")->delimiter(',');
  g->add_option("-o,--out", in.out_dir, "Output directory")->required();
  in.run.add(*g);

  LexfreqArgs lf;
  auto* x = app.add_subcommand("lexfreq", "Mean log lexical frequency of nouns and verbs");
  x->add_option("--lexicon", lf.lexicon, "Frequency lexicon TSV (word, frequency)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* pos_opt = x->add_option("--pos", lf.pos_jsonl, "POS sidecar JSON-lines")->check(CLI::ExistingFile);
  auto* nouns_opt = x->add_option("--nouns", lf.nouns, "Noun word list")->check(CLI::ExistingFile);
  auto* verbs_opt = x->add_option("--verbs", lf.verbs, "Verb word list")->check(CLI::ExistingFile);
  pos_opt->excludes(nouns_opt)->excludes(verbs_opt);
  nouns_opt->needs(verbs_opt);
  verbs_opt->needs(nouns_opt);
  auto* lcorpus_opt = x->add_option("--corpus", lf.corpus, "Corpus (.jsonl)")->check(CLI::ExistingFile);
  auto* lnarr_opt =
      x->add_option("--narratives", lf.narratives_dir, "Directory of <band>.txt narratives")->check(CLI::ExistingDirectory);
  x->add_option("--scores", lf.scores, "LOOCV scores.csv; adds the regression")
      ->check(CLI::ExistingFile)
      ->needs(lcorpus_opt);
  x->add_option("-o,--out", lf.out_dir, "Output directory")->required();

  GradcheckArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gc.run.add(*c);
  c->add_option("--vocab-size", gc.vocab_size, "Vocabulary size including <unk> and <eos>");
  c->add_option("--length", gc.length, "Tokens in the random test sequence");
  c->add_option("--epsilon", gc.epsilon, "Finite-difference step");
  c->add_option("--tolerance", gc.tolerance, "Maximum accepted relative error");
  c->add_option("--precision", gc.precision, "extended or double");

  CLI11_PARSE(app, argc, argv);

  Invocation inv;
  for (int i = 1; i < argc; ++i) inv.arguments.emplace_back(argv[i]);
  try {
    if (p->parsed()) return inv.command = "preprocess", cmd_preprocess(pre, inv);
    if (t->parsed()) return inv.command = "train", cmd_train(tr, inv);
    if (l->parsed()) return inv.command = "loocv", cmd_loocv(lv, inv);
    if (g->parsed()) {
      if (in.pairs.empty() && !in.corpus) throw InvalidArgument("interrogate needs --pair or --corpus");
      if (!in.narratives_dir && !in.narrative) throw InvalidArgument("interrogate needs --narratives or --narrative");
      return inv.command = "interrogate", cmd_interrogate(in, inv);
    }
    if (x->parsed()) {
      if (!lf.pos_jsonl && !lf.nouns) throw InvalidArgument("lexfreq needs --pos or --nouns/--verbs");
      if (!lf.corpus && !lf.narratives_dir) throw InvalidArgument("lexfreq needs --corpus or --narratives");
      (void)lnarr_opt;
      return inv.command = "lexfreq", cmd_lexfreq(lf, inv);
    }
    if (c->parsed()) return inv.command = "gradcheck", cmd_gradcheck(gc, inv);
  } catch (const std::exception& e) {
    std::cerr << "pplab: error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
