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
#include <functional>

#include <gtest/gtest.h>

#include "eac/ngram.hpp"
#include "oracles.hpp"
#include "test_models.hpp"

namespace eac {
namespace {

double sum_exp(const std::vector<double>& lp) {
  KahanSum s;
  for (double v : lp) s.add(std::exp(v));
  return s.value();
}

// Every sequence over `alphabet` of length exactly `len`.
void for_each_sequence(const Tokens& alphabet, std::size_t len, const std::function<void(const Tokens&)>& fn) {
  Tokens seq(len);
  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (pos == len) {
      fn(seq);
      return;
    }
    for (const auto& t : alphabet) {
      seq[pos] = t;
      rec(pos + 1);
    }
  };
  rec(0);
}

std::vector<TrainingPair> random_pairs(Rng& rng, std::size_t count, std::size_t vocab, std::size_t max_len) {
  std::vector<TrainingPair> pairs;
  for (std::size_t i = 0; i < count; ++i) {
    auto in = oracle::random_tokens(rng, max_len, vocab);
    if (rng.below(2)) in.insert(in.begin(), rng.below(2) ? "summarize:" : "generate:");
    pairs.emplace_back(std::move(in), oracle::random_tokens(rng, max_len, vocab));
  }
  return pairs;
}

TEST(Ngram, Validation) {
  EXPECT_THROW(train_ngram({}), Error);
  EXPECT_THROW(NgramSeq2Seq({0, 0.01, 0.5}), Error);
  EXPECT_THROW(NgramSeq2Seq({3, 0.0, 0.5}), Error);
  EXPECT_THROW(NgramSeq2Seq({3, 0.01, 1.5}), Error);
  auto m = train_ngram({{{"a"}, {"a"}}});
  EXPECT_THROW(m.with_copy_weight(-0.1), Error);
  EXPECT_THROW(generate_greedy(m, Tokens{"a"}, 0), Error);
}

TEST(Ngram, StepDistributionsNormalize) {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pairs = random_pairs(rng, 6, 5, 5);
    const NgramOptions opt{1 + static_cast<int>(rng.below(4)), 0.001 + rng.uniform(), rng.uniform()};
    const auto m = train_ngram(pairs, opt);
    for (int probe = 0; probe < 10; ++probe) {
      const auto in = oracle::random_tokens(rng, 6, 7);
      const auto prefix = oracle::random_tokens(rng, 4, 7);
      EXPECT_NEAR(sum_exp(m.next_log_probs(in, prefix)), 1.0, 1e-9);
    }
  }
}

TEST(Ngram, ProperOverShortOutputs) {
  // Vocabulary: EOS, <unk>, a, b.
  const auto m = train_ngram({{{"a"}, {"a"}}, {{"b", "a"}, {"a", "b"}}}, {2, 0.3, 0.5});
  ASSERT_EQ(m.vocabulary().size(), 4u);
  Tokens alphabet;
  for (std::size_t i = 0; i < m.vocabulary().size(); ++i)
    if (i != m.eos_id()) alphabet.push_back(m.vocabulary()[i]);
  for (const Tokens& input : {Tokens{"a"}, Tokens{"b", "b"}, Tokens{}}) {
    KahanSum complete, pending;
    for (std::size_t len = 0; len <= 3; ++len)
      for_each_sequence(alphabet, len, [&](const Tokens& out) { complete.add(std::exp(m.log_prob(input, out))); });
    EXPECT_LE(complete.value(), 1.0 + 1e-6);
    // Mass of every unfinished length-4 prefix closes the gap exactly.
    for_each_sequence(alphabet, 4, [&](const Tokens& prefix) {
      double p = 1.0;
      for (std::size_t t = 0; t < prefix.size(); ++t)
        p *= std::exp(m.next_log_probs(input, std::span<const std::string>(prefix).first(t))[m.token_id(prefix[t])]);
      pending.add(p);
    });
    EXPECT_NEAR(complete.value() + pending.value(), 1.0, 1e-9);
  }
}

TEST(Ngram, MatchesRecountingOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t vocab = trial < 20 ? 1 : 4;  // one word + EOS + <unk> = 3
    const auto pairs = random_pairs(rng, 5, vocab, 4);
    const NgramOptions opt{1 + static_cast<int>(rng.below(3)), 0.01 + rng.uniform(), rng.uniform()};
    const auto m = train_ngram(pairs, opt);
    for (int probe = 0; probe < 8; ++probe) {
      auto in = oracle::random_tokens(rng, 5, vocab + 1);
      if (rng.below(3) == 0) in.insert(in.begin(), "generate:");
      const auto out = oracle::random_tokens(rng, 2, vocab + 1);
      const double expected = std::log(oracle::ngram_sequence_prob(pairs, opt.order, opt.alpha, opt.copy_weight, in, out));
      EXPECT_NEAR(log_likelihood(m, in, out), expected, 1e-10);
      // Stepwise scoring through the generic contract agrees with the fast path.
      EXPECT_NEAR(m.SequenceModel::log_prob(in, out), m.log_prob(in, out), 1e-12);
    }
  }
}

TEST(Ngram, ChainRuleOverConcatenation) {
  Rng rng(8);
  const auto m = train_ngram(random_pairs(rng, 10, 5, 6));
  const Tokens in{"w1", "w2"};
  const Tokens out{"w0", "w3", "w1", "w4"};
  double steps = 0.0;
  for (std::size_t t = 0; t < out.size(); ++t)
    steps += m.next_log_probs(in, std::span<const std::string>(out).first(t))[m.token_id(out[t])];
  steps += m.next_log_probs(in, out)[m.eos_id()];
  EXPECT_NEAR(m.log_prob(in, out), steps, 1e-12);
}

TEST(Ngram, MemorizesSinglePair) {
  const Tokens in{"generate:", "q", "<sep>", "x", "y"};
  const Tokens out{"the", "cat", "sat", "on", "the", "mat"};
  const auto m = train_ngram({{in, out}}, {3, 1e-9, 0.0});
  EXPECT_EQ(generate_greedy(m, in, 20), out);
  EXPECT_NEAR(log_likelihood(m, in, out), 0.0, 1e-6);
}

TEST(Ngram, UnseenTokenIsFiniteAndBelowSeen) {
  const auto m = train_ngram({{{"a", "b"}, {"a", "b"}}, {{"a"}, {"b"}}});
  const Tokens in{"a"};
  const double unseen = m.log_prob(in, Tokens{"zebra"});
  EXPECT_TRUE(std::isfinite(unseen));
  EXPECT_LT(unseen, 0.0);
  const auto lp = m.next_log_probs(in, {});
  EXPECT_TRUE(std::isfinite(lp[m.token_id("zebra")]));
  EXPECT_LT(lp[m.token_id("zebra")], lp[m.token_id("a")]);
  EXPECT_LT(lp[m.token_id("zebra")], lp[m.token_id("b")]);
}

TEST(Ngram, FullCopyWeightSeesOnlyTheInputBag) {
  Rng rng(11);
  const auto m = train_ngram(random_pairs(rng, 20, 6, 6), {3, 0.05, 1.0});
  for (int trial = 0; trial < 50; ++trial) {
    auto in = oracle::random_tokens(rng, 8, 6);
    const auto out = oracle::random_tokens(rng, 4, 6);
    const double before = m.log_prob(in, out);
    for (std::size_t i = in.size(); i > 1; --i) std::swap(in[i - 1], in[rng.below(i)]);
    EXPECT_NEAR(m.log_prob(in, out), before, 1e-12);
  }
}

TEST(Ngram, SaveLoadRoundTrip) {
  Rng rng(3);
  const auto m = train_ngram(random_pairs(rng, 15, 6, 6), {3, 0.02, 0.4});
  const auto path = std::filesystem::temp_directory_path() / "eac_ngram_roundtrip.json";
  m.save(path.string());
  const auto back = NgramSeq2Seq::load(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back.to_json().dump(), m.to_json().dump());
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = oracle::random_tokens(rng, 6, 7);
    const auto out = oracle::random_tokens(rng, 4, 7);
    EXPECT_EQ(back.log_prob(in, out), m.log_prob(in, out));
  }
  auto bad = m.to_json();
  bad["format"] = "eac-ngram/0";
  EXPECT_THROW(NgramSeq2Seq::from_json(bad), Error);
  bad = m.to_json();
  bad.erase("rows");
  EXPECT_THROW(NgramSeq2Seq::from_json(bad), Error);
}

TEST(Ngram, TuningPrefersCopyingOnACopyTask) {
  std::vector<TrainingPair> train, valid;
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const std::string w = "w" + std::to_string(rng.below(8));
    (i < 150 ? train : valid).push_back({{"x", w}, {w}});
  }
  const auto m = train_ngram(train, {3, 0.01, 0.0});
  EXPECT_GE(tune_copy_weight(m, valid), 0.9);
  EXPECT_EQ(tune_copy_weight(m, valid, {0.3}), 0.3);
}

TEST(Ngram, TunedTrainingUsesAllPairs) {
  std::vector<TrainingPair> pairs;
  for (int i = 0; i < 100; ++i) {
    const std::string w = "w" + std::to_string(i % 37);
    pairs.push_back({{"x", w}, {w}});
  }
  const auto m = train_ngram_tuned(pairs, {3, 0.01, 0.0}, 5);
  EXPECT_GE(m.copy_weight(), 0.9);
  // Counts come from every pair, not just the tuning part.
  EXPECT_EQ(m.with_copy_weight(0.5).log_prob(Tokens{"x", "w3"}, Tokens{"w3"}),
            train_ngram(pairs, {3, 0.01, 0.5}).log_prob(Tokens{"x", "w3"}, Tokens{"w3"}));
  EXPECT_EQ(train_ngram_tuned(pairs, {3, 0.01, 0.0}, 5).copy_weight(), m.copy_weight());
  const auto single = train_ngram_tuned({pairs[0]}, {3, 0.01, 0.25}, 5);
  EXPECT_EQ(single.copy_weight(), 0.25);
}

TEST(LogLikelihood, UniformModel) {
  const UniformModel u({"a", "b", "c", "d"});
  EXPECT_EQ(u.vocabulary().size(), 5u);
  const Tokens out{"a", "c", "zzz"};
  EXPECT_NEAR(log_likelihood(u, Tokens{"x"}, out), 4 * std::log(1.0 / 5.0), 1e-12);
  EXPECT_NEAR(log_likelihood(u, Tokens{}, Tokens{}), std::log(1.0 / 5.0), 1e-12);
}

TEST(LogLikelihood, CertainModelScoresZero) {
  const test::CertainModel m({{{"in"}, {"x", "y"}}});
  EXPECT_EQ(log_likelihood(m, Tokens{"in"}, Tokens{"x", "y"}), 0.0);
  EXPECT_EQ(generate_greedy(m, Tokens{"in"}, 10), (Tokens{"x", "y"}));
}

TEST(LogLikelihood, MatchesPathEnumeration) {
  // Vocabulary of three (a, EOS, <unk>), outputs up to length two.
  const std::vector<TrainingPair> pairs{{{"a"}, {"a"}}, {{}, {"a", "a"}}, {{"a", "a"}, {}}};
  const auto m = train_ngram(pairs, {2, 0.5, 0.3});
  ASSERT_EQ(m.vocabulary().size(), 3u);
  const Tokens alphabet{"a", "<unk>"};
  for (const Tokens& in : {Tokens{"a"}, Tokens{}}) {
    for (std::size_t len = 0; len <= 2; ++len) {
      for_each_sequence(alphabet, len, [&](const Tokens& out) {
        double p = 1.0;
        Tokens prefix;
        for (const auto& t : out) {
          p *= std::exp(m.next_log_probs(in, prefix)[m.token_id(t)]);
          prefix.push_back(t);
        }
        p *= std::exp(m.next_log_probs(in, prefix)[m.eos_id()]);
        EXPECT_NEAR(log_likelihood(m, in, out), std::log(p), 1e-12);
        EXPECT_NEAR(log_likelihood(m, in, out),
                    std::log(oracle::ngram_sequence_prob(pairs, 2, 0.5, 0.3, in, out)), 1e-12);
      });
    }
  }
}

TEST(Generate, MaxLenOneAndTieBreak) {
  // Two equally likely first tokens; "apple" < "banana".
  const auto m = train_ngram({{{}, {"banana"}}, {{}, {"apple"}}}, {2, 0.01, 0.0});
  EXPECT_EQ(generate_greedy(m, Tokens{}, 1), (Tokens{"apple"}));
  EXPECT_EQ(generate_greedy(m, Tokens{}, 5), (Tokens{"apple"}));
  // EOS wins at the first step: empty output.
  const auto empty = train_ngram({{{}, {}}, {{}, {}}, {{}, {"x"}}}, {2, 0.01, 0.0});
  EXPECT_TRUE(generate_greedy(empty, Tokens{}, 1).empty());
  // The unknown class is never emitted.
  const auto unk = train_ngram({{{}, {"<unk>"}}}, {2, 0.01, 0.0});
  EXPECT_NE(generate_greedy(unk, Tokens{}, 1), (Tokens{"<unk>"}));
}

}  // namespace
}  // namespace eac
