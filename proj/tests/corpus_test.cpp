// Copyright 2026 The eacausal Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "eac/corpus.hpp"

namespace eac {
namespace {

Example sample_example() {
  Example ex;
  ex.question = "How do I keep mice out?";
  ex.answers.push_back({{"Seal the gaps.", "I like cats."}, std::vector<bool>{true, false}});
  ex.answers.push_back({{"Store food in jars."}, std::nullopt});
  ex.cluster_summaries = std::vector<std::string>{"Seal gaps.", "Store food."};
  ex.summary = "Seal gaps and store food safely.";
  return ex;
}

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_corpus(in, "c.jsonl");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(Corpus, EmptyInputIsEmptyCorpus) {
  std::istringstream in("");
  EXPECT_TRUE(parse_corpus(in).empty());
  std::istringstream blank("\n  \n");
  EXPECT_TRUE(parse_corpus(blank).empty());
}

TEST(Corpus, RoundTripIsIdentity) {
  Example plain;
  plain.question = "q?";
  plain.answers.push_back({{"only."}, std::nullopt});
  plain.summary = "";
  const std::vector<Example> corpus{sample_example(), plain};
  const std::string text = corpus_to_jsonl(corpus);
  std::istringstream in(text);
  const auto back = parse_corpus(in);
  EXPECT_EQ(back, corpus);
  EXPECT_EQ(corpus_to_jsonl(back), text);

  const auto path = std::filesystem::temp_directory_path() / "eac_corpus_roundtrip.jsonl";
  save_corpus(corpus, path.string());
  EXPECT_EQ(load_corpus(path.string()), corpus);
  std::filesystem::remove(path);
}

TEST(Corpus, CanonicalKeyOrder) {
  const std::string line = corpus_to_jsonl({sample_example()});
  EXPECT_LT(line.find("\"answers\""), line.find("\"cluster_summaries\""));
  EXPECT_LT(line.find("\"cluster_summaries\""), line.find("\"question\""));
  EXPECT_LT(line.find("\"question\""), line.find("\"summary\""));
  EXPECT_LT(line.find("\"relevance\""), line.find("\"sentences\""));
}

TEST(Corpus, ErrorsCarryLineNumbers) {
  const std::string good = R"({"question":"q","answers":[{"sentences":["a."]}],"summary":"s"})";
  EXPECT_NE(error_of(good + "\n" + R"({"question":"q","answers":[{"sentences":["a."],"relevance":[1]}],"summary":"s"})")
                .find("c.jsonl:2:"),
            std::string::npos);
  EXPECT_NE(error_of(good + "\n\n" + R"({"question":"q","answers":[{"sentences":["a.","b."],"relevance":[true]}],"summary":"s"})")
                .find("c.jsonl:3:"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"question":"q","answers":[{"sentences":["a."]}],"summary":"s","extra":1})").find("unknown field"),
            std::string::npos);
  EXPECT_NE(error_of("{not json").find("c.jsonl:1:"), std::string::npos);
  EXPECT_NE(error_of(R"({"question":"q","answers":[],"summary":"s"})").find("no answers"), std::string::npos);
  EXPECT_NE(error_of(R"({"question":"q","answers":[{"sentences":[]}],"summary":"s"})").find("no sentences"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"answers":[{"sentences":["a."]}],"summary":"s"})").find("question"), std::string::npos);
  EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), Error);
}

TEST(Verbalizer, StandardTables) {
  const auto v = Verbalizer::standard(2, 3);
  EXPECT_EQ(v.question(1), "q1?");
  EXPECT_EQ(v.sentence(2), "w2.");
  EXPECT_THROW(v.sentence(3), Error);
  EXPECT_THROW(v.question(2), Error);
  const auto multi = Verbalizer::standard(1, 2, 3);
  EXPECT_EQ(multi.sentence(1), "w1p0 w1p1 w1p2.");
  EXPECT_THROW(Verbalizer({"a"}, {"x", "x"}), Error);
  EXPECT_THROW(Verbalizer({""}, {"x"}), Error);
}

TEST(Synthesize, AllRelevantMarksEverySentence) {
  const Sem sem = example_sem(ExampleKind::AllRelevant, {3});
  const auto corpus = synthesize_corpus(sem, Verbalizer::for_sem(sem), 200, 1);
  for (const auto& ex : corpus) {
    ASSERT_EQ(ex.answers.size(), 1u);
    EXPECT_EQ(ex.answers[0].sentences.size(), 3u);
    for (bool r : *ex.answers[0].relevance) EXPECT_TRUE(r);
    EXPECT_EQ(ex.summary, join(ex.answers[0].sentences));
  }
}

TEST(Synthesize, UniformPickMarksExactlyOne) {
  const Sem sem = example_sem(ExampleKind::UniformPick, {4});
  const auto corpus = synthesize_corpus(sem, Verbalizer::for_sem(sem), 500, 2);
  for (const auto& ex : corpus) {
    const auto& rel = *ex.answers[0].relevance;
    ASSERT_EQ(std::count(rel.begin(), rel.end(), true), 1);
    const auto pos = static_cast<std::size_t>(std::find(rel.begin(), rel.end(), true) - rel.begin());
    EXPECT_EQ(ex.summary, ex.answers[0].sentences[pos]);
  }
}

TEST(Synthesize, LabelRatesMatchSemWithinThreeSigma) {
  // Each of the 4 positions is the picked one with probability 1/4.
  const Sem sem = example_sem(ExampleKind::UniformPick, {4});
  const std::size_t n = 10000;
  const auto corpus = synthesize_corpus(sem, Verbalizer::for_sem(sem), n, 3, 4);
  const double p = 0.25;
  const double sigma = std::sqrt(n * p * (1 - p));
  for (std::size_t j = 0; j < 4; ++j) {
    double hits = 0;
    for (const auto& ex : corpus) hits += (*ex.answers[0].relevance)[j];
    EXPECT_LE(std::abs(hits - n * p), 3 * sigma) << "position " << j;
  }
  // FirstOnly: position 0 always, others never.
  const Sem first = example_sem(ExampleKind::FirstOnly, {3});
  for (const auto& ex : synthesize_corpus(first, Verbalizer::for_sem(first), 300, 4))
    EXPECT_EQ(*ex.answers[0].relevance, (std::vector<bool>{true, false, false}));
}

TEST(Synthesize, DeterministicAcrossThreads) {
  const Sem sem = example_sem(ExampleKind::UniformPick, {4, 6, false});
  const auto v = Verbalizer::for_sem(sem);
  const auto a = corpus_to_jsonl(synthesize_corpus(sem, v, 300, 9, 1));
  const auto b = corpus_to_jsonl(synthesize_corpus(sem, v, 300, 9, 8));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, corpus_to_jsonl(synthesize_corpus(sem, v, 300, 10, 1)));
}

TEST(Synthesize, Errors) {
  const Sem sem = example_sem(ExampleKind::UniformPick, {4});
  EXPECT_THROW(synthesize_corpus(sem, Verbalizer::for_sem(sem), 0, 1), Error);
  EXPECT_THROW(synthesize_corpus(sem, Verbalizer::standard(1, 2), 10, 1), Error);
  const Sem bare = random_sem({1, 2, 2, 2}, 1.0, 5);
  EXPECT_THROW(synthesize_corpus(bare, Verbalizer::standard(1, 2), 10, 1), Error);
}

}  // namespace
}  // namespace eac
