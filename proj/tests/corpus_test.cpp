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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "pplab/corpus/chat.hpp"
#include "pplab/corpus/corpus.hpp"
#include "pplab/corpus/preprocess.hpp"
#include "pplab/corpus/vocabulary.hpp"
#include "pplab/random.hpp"
#include "support/synthetic.hpp"

namespace fs = std::filesystem;
using namespace pplab;
using namespace pplab::corpus;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> utterances_of(const TokenSequence& s) {
  std::vector<std::vector<std::string>> out;
  std::size_t start = 0;
  for (auto end : s.utterance_ends) {
    out.emplace_back(s.tokens.begin() + static_cast<std::ptrdiff_t>(start),
                     s.tokens.begin() + static_cast<std::ptrdiff_t>(end));
    start = end;
  }
  return out;
}

std::vector<std::vector<std::string>> read_expected(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ws(line);
    std::vector<std::string> words;
    for (std::string w; ws >> w;) words.push_back(w);
    out.push_back(words);
  }
  return out;
}

const fs::path kFixtures = fs::path(PPLAB_TEST_DATA) / "chat";

}  // namespace

TEST(ChatGolden, EveryFixtureMatchesExpectedTokens) {
  int seen = 0;
  for (const auto& entry : fs::directory_iterator(kFixtures)) {
    if (entry.path().extension() != ".cha") continue;
    ++seen;
    SCOPED_TRACE(entry.path().filename().string());
    auto raw = parse_chat(slurp(entry.path()), entry.path().filename().string());
    auto seq = preprocess(raw);
    auto expected = read_expected(fs::path(entry.path()).replace_extension(".expected"));
    EXPECT_EQ(utterances_of(seq), expected);
    std::size_t n = 0;
    for (auto& u : expected) n += u.size();
    EXPECT_EQ(seq.tokens.size(), n);
  }
  EXPECT_EQ(seen, 10);
}

TEST(Chat, IdHeaderSuppliesMetadata) {
  auto raw = parse_chat(slurp(kFixtures / "10-speaker-code.cha"), "S042-3.cha");
  EXPECT_EQ(raw.participant_id, "S042");
  EXPECT_EQ(raw.visit_index, 3);
  ASSERT_TRUE(raw.group.has_value());
  EXPECT_EQ(*raw.group, Group::control);
  EXPECT_EQ(raw.mmse, 29);
  EXPECT_EQ(raw.age, 67.0);
  EXPECT_EQ(raw.education, 12.0);
}

TEST(Chat, MalformedTierReportsLine) {
  const std::string text = "@Begin\n*PAR:\tfine .\n*PAR no tab here\n@End\n";
  try {
    parse_chat(text, "x.cha");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Chat, EmptyFileIsAnError) { EXPECT_THROW(parse_chat("\n  \n", "x.cha"), ParseError); }

TEST(Chat, UnrecognizedLineIsAnError) {
  EXPECT_THROW(parse_chat("@Begin\nhello there\n", "x.cha"), ParseError);
}

TEST(Chat, CrlfAndBomAreAccepted) {
  auto raw = parse_chat("\xEF\xBB\xBF@Begin\r\n*PAR:\tthe dog .\r\n@End\r\n", "p-1.cha");
  ASSERT_EQ(raw.utterances.size(), 1u);
  EXPECT_EQ(preprocess(raw).tokens, (std::vector<std::string>{"the", "dog"}));
}

TEST(Chat, GroupLabels) {
  EXPECT_EQ(parse_group("ProbableAD"), Group::dementia);
  EXPECT_EQ(parse_group("PossibleAD"), Group::dementia);
  EXPECT_EQ(parse_group("Control"), Group::control);
  EXPECT_EQ(parse_group("MCI"), std::nullopt);
}

TEST(Preprocess, EmptyTranscriptIsNotAnError) {
  RawTranscript raw;
  raw.utterances = {"&-uh um .", "xxx"};
  auto seq = preprocess(raw);
  EXPECT_TRUE(seq.empty());
  EXPECT_TRUE(seq.utterance_ends.empty());
}

TEST(Preprocess, WithoutEosNoBoundariesAreRecorded) {
  PreprocessConfig cfg;
  cfg.append_eos = false;
  auto seq = preprocess_text("a b\nc", cfg);
  EXPECT_EQ(seq.tokens.size(), 3u);
  EXPECT_TRUE(seq.utterance_ends.empty());
}

namespace {

// Random CHAT-like utterance built from a mix of words, codes and symbols.
std::string random_utterance(Rng& rng) {
  static const std::vector<std::string> parts = {
      "the", "Boy", "&-uh", "um", "uh", "xxx", "[/]", "[//]", "<the", "boy>", "don't", "'", "cookie_jar",
      "ice+cream", "&=laughs", "0is", "bluh@o", "(.)", ".", "?", "!", "Mother's", "x1y2", "UM", "[*", "m:]",
      "\"quoted\"", "+...", "->", "\xE2\x80\x9Cword\xE2\x80\x9D", "ça", "Er", "yyy", "www", "we're", "'tis"};
  std::string out;
  const auto n = 1 + uniform_index(rng, 12);
  for (std::uint64_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += parts[uniform_index(rng, parts.size())];
  }
  return out;
}

}  // namespace

TEST(PreprocessProperty, OutputTokensAreCleanAndIdempotent) {
  Rng rng(2024);
  const PreprocessConfig cfg;
  for (int trial = 0; trial < 2000; ++trial) {
    RawTranscript raw;
    const auto utts = uniform_index(rng, 5);
    for (std::uint64_t u = 0; u < utts; ++u) raw.utterances.push_back(random_utterance(rng));
    auto seq = preprocess(raw, cfg);
    for (auto& t : seq.tokens) {
      ASSERT_FALSE(t.empty());
      for (char c : t) ASSERT_TRUE((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'') << t;
      ASSERT_FALSE(cfg.fillers.contains(t)) << t;
      ASSERT_FALSE(cfg.noise.contains(t)) << t;
    }
    // Re-running on the cleaned text changes nothing.
    RawTranscript again;
    for (auto& u : utterances_of(seq)) {
      std::string line;
      for (auto& w : u) line += (line.empty() ? "" : " ") + w;
      again.utterances.push_back(line);
    }
    auto twice = preprocess(again, cfg);
    ASSERT_EQ(twice.tokens, seq.tokens);
    ASSERT_EQ(twice.utterance_ends, seq.utterance_ends);
  }
}

TEST(Vocabulary, ReservedIdsAndOrdering) {
  TokenSequence a{{"b", "a", "b", "c", "b", "a"}, {}, "p", 0};
  std::vector<TokenSequence> seqs{a};
  auto v = build_vocab(seqs);
  EXPECT_EQ(v.token(0), "<unk>");
  EXPECT_EQ(v.token(1), "<eos>");
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<unk>", "<eos>", "b", "a", "c"}));
  EXPECT_EQ(v.id("zzz"), v.unk_id());
  auto v2 = build_vocab(seqs, 2);
  EXPECT_FALSE(v2.contains("c"));
  EXPECT_THROW(build_vocab(seqs, 0), InvalidArgument);
}

TEST(Vocabulary, EncodeInsertsEosAtUtteranceEnds) {
  TokenSequence s{{"a", "b", "c"}, {2, 3}, "p", 0};
  std::vector<TokenSequence> seqs{s};
  auto v = build_vocab(seqs);
  auto ids = v.encode(s);
  EXPECT_EQ(v.decode(ids), (std::vector<std::string>{"a", "b", "<eos>", "c", "<eos>"}));
}

TEST(Vocabulary, RejectsBadIdLists) {
  EXPECT_THROW(Vocabulary({"a", "b"}), InvalidArgument);
  EXPECT_THROW(Vocabulary({"<unk>", "<eos>", "x", "x"}), InvalidArgument);
}

TEST(Corpus, LoocvPartitionsTranscripts) {
  auto c = testkit::synthetic_corpus();
  std::multiset<std::pair<std::string, int>> seen;
  for (auto& p : c.participants()) {
    auto split = split_loocv(c, p.participant_id);
    EXPECT_EQ(split.train.size(), c.size() - 1);
    EXPECT_EQ(split.train.find(p.participant_id), nullptr);
    EXPECT_EQ(split.train.transcript_count() + split.test.size(), c.transcript_count());
    for (auto& t : split.test) seen.emplace(t.participant_id, t.visit);
    for (auto& q : split.train.participants())
      for (auto& t : q.transcripts) EXPECT_NE(t.participant_id, p.participant_id);
  }
  std::multiset<std::pair<std::string, int>> all;
  for (auto& t : c.transcripts()) all.emplace(t.participant_id, t.visit);
  EXPECT_EQ(seen, all);
}

TEST(Corpus, RejectsDuplicatesAndEmptyParticipants) {
  ParticipantRecord p{"a", Group::control, {}, {}, {{{"x"}, {}, "a", 0}}, {}};
  EXPECT_THROW(Corpus({p, p}), InvalidArgument);
  ParticipantRecord empty{"b", Group::control, {}, {}, {}, {}};
  EXPECT_THROW(Corpus({empty}), InvalidArgument);
  EXPECT_THROW(Corpus().at("nobody"), InvalidArgument);
}

TEST(Corpus, SidecarWinsAndWarns) {
  RawTranscript r1;
  r1.participant_id = "p1";
  r1.visit_index = 0;
  r1.utterances = {"the boy ."};
  r1.group = Group::control;
  r1.mmse = 28;
  r1.age = 70;
  RawTranscript r2 = r1;
  r2.visit_index = 1;
  r2.mmse = 27;
  RawTranscript lost = r1;
  lost.participant_id = "p2";
  lost.group.reset();
  RawTranscript silent = r1;
  silent.participant_id = "p3";
  silent.utterances = {"&-uh"};

  std::istringstream csv("participant_id,group,age,education,visit,mmse\r\np1,ProbableAD,71,12,1,20\r\n");
  auto sidecar = read_metadata_csv(csv);
  BuildSummary summary;
  auto c = build_corpus({r1, r2, lost, silent}, sidecar, {}, &summary);
  ASSERT_EQ(c.size(), 1u);
  const auto& p = c.at("p1");
  EXPECT_EQ(p.group, Group::dementia);
  EXPECT_EQ(p.age_at_baseline, 71.0);
  EXPECT_EQ(p.education, 12.0);
  EXPECT_EQ(p.mmse_at(0), 28);
  EXPECT_EQ(p.mmse_at(1), 20);
  EXPECT_EQ(p.last_mmse(), 20);
  EXPECT_EQ(summary.transcripts, 4u);
  EXPECT_EQ(summary.empty_transcripts, 1u);
  EXPECT_EQ(summary.ungrouped_transcripts, 1u);
  int conflicts = 0;
  for (auto& w : summary.warnings) conflicts += w.find("sidecar value used") != std::string::npos;
  EXPECT_EQ(conflicts, 3);  // group, age, mmse of visit 1
}

TEST(Corpus, MetadataCsvErrorsNameTheLine) {
  std::istringstream bad("participant_id,group,age,education,visit,mmse\np1,control,old,12,0,29\n");
  try {
    read_metadata_csv(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  std::istringstream missing("participant_id,group\np1,control\n");
  EXPECT_THROW(read_metadata_csv(missing), ParseError);
}

TEST(Corpus, JsonLinesRoundTrip) {
  auto c = testkit::synthetic_corpus();
  std::stringstream ss;
  write_jsonl(c, ss);
  auto back = read_jsonl(ss);
  ASSERT_EQ(back.size(), c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& a = c.participants()[i];
    const auto& b = back.at(a.participant_id);
    EXPECT_EQ(a.group, b.group);
    EXPECT_EQ(a.transcripts, b.transcripts);
    EXPECT_EQ(a.mmse_history, b.mmse_history);
    EXPECT_EQ(a.age_at_baseline, b.age_at_baseline);
    EXPECT_EQ(a.education, b.education);
  }
  std::stringstream again;
  write_jsonl(back, again);
  std::stringstream first;
  write_jsonl(c, first);
  EXPECT_EQ(first.str(), again.str());
}

TEST(Corpus, JsonLinesErrorsNameTheLine) {
  std::istringstream bad("{\"participant_id\":\"a\",\"visit\":0,\"group\":\"control\",\"tokens\":[\"x\"]}\n{broken\n");
  try {
    read_jsonl(bad);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Corpus, ChatDirectoryCollectsFailures) {
  const auto all = read_chat_directory(kFixtures);
  EXPECT_EQ(all.transcripts.size(), 10u);
  EXPECT_TRUE(all.failures.empty());

  const fs::path dir = fs::temp_directory_path() / "pplab_chat_dir_test";
  fs::remove_all(dir);
  fs::create_directories(dir / "nested");
  fs::copy_file(kFixtures / "01-basic.cha", dir / "nested" / "ok.cha");
  std::ofstream(dir / "bad.cha") << "not a transcript\n";
  std::ofstream(dir / "notes.txt") << "ignored\n";
  const auto some = read_chat_directory(dir);
  ASSERT_EQ(some.transcripts.size(), 1u);
  ASSERT_EQ(some.failures.size(), 1u);
  EXPECT_NE(some.failures[0].first.find("bad.cha"), std::string::npos);
  EXPECT_THROW(read_chat_directory(dir / "notes.txt"), InvalidArgument);
  fs::remove_all(dir);
}
