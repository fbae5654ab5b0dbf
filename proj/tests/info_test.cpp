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

#include "eac/info.hpp"

#include <cmath>
#include <map>

#include <gtest/gtest.h>

namespace eac {
namespace {

JointDistribution pair(double a, double b, double c, double d) {
  return JointDistribution({{"A", 2}, {"B", 2}}, {a, b, c, d});
}

JointDistribution random_table(Rng& rng, std::vector<Variable> vars) {
  std::size_t cells = 1;
  for (const auto& v : vars) cells *= v.cardinality;
  std::vector<double> p(cells);
  double total = 0.0;
  for (auto& x : p) {
    // Sparse-ish tables exercise the 0 log 0 convention.
    x = rng.uniform() < 0.2 ? 0.0 : rng.gamma(0.7);
    total += x;
  }
  if (total == 0.0) p[0] = total = 1.0;
  for (auto& x : p) x /= total;
  return JointDistribution(std::move(vars), std::move(p));
}

// Entropy by explicit enumeration with a map keyed on the kept values.
double brute_entropy(const JointDistribution& d, const VarSet& keep) {
  const auto& vars = d.variables();
  std::map<std::vector<std::size_t>, double> marg;
  std::vector<std::size_t> digit(vars.size(), 0);
  for (std::size_t flat = 0; flat < d.size(); ++flat) {
    std::size_t rest = flat;
    for (std::size_t i = vars.size(); i-- > 0;) {
      digit[i] = rest % vars[i].cardinality;
      rest /= vars[i].cardinality;
    }
    std::vector<std::size_t> key;
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (std::find(keep.begin(), keep.end(), vars[i].name) != keep.end()) key.push_back(digit[i]);
    marg[key] += d.probs()[flat];
  }
  double h = 0.0;
  for (const auto& [k, p] : marg)
    if (p > 0) h -= p * std::log(p);
  return h;
}

TEST(JointDistribution, RejectsBadTables) {
  EXPECT_THROW(JointDistribution({{"A", 2}}, {0.5, 0.6}), Error);
  EXPECT_THROW(JointDistribution({{"A", 2}}, {-0.1, 1.1}), Error);
  EXPECT_THROW(JointDistribution({{"A", 2}, {"A", 2}}, {0.25, 0.25, 0.25, 0.25}), Error);
  EXPECT_THROW(JointDistribution({{"A", 3}}, {0.5, 0.5}), Error);
  EXPECT_THROW(JointDistribution({{"A", 5000}, {"B", 5000}}, std::vector<double>(1, 1.0)), Error);
}

TEST(JointDistribution, RenormalizesTinyDeviation) {
  JointDistribution d({{"A", 2}}, {0.5 + 4e-7, 0.5});
  EXPECT_NEAR(d.probs()[0] + d.probs()[1], 1.0, 1e-15);
}

TEST(Marginalize, UniformPairToUniform) {
  auto m = marginalize(pair(0.25, 0.25, 0.25, 0.25), {"A"});
  ASSERT_EQ(m.variables().size(), 1u);
  EXPECT_DOUBLE_EQ(m.probs()[0], 0.5);
  EXPECT_DOUBLE_EQ(m.probs()[1], 0.5);
}

TEST(Marginalize, IdentityOnAllVariables) {
  auto d = pair(0.1, 0.2, 0.3, 0.4);
  auto m = marginalize(d, {"B", "A"});
  EXPECT_EQ(m.variables(), d.variables());
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(m.probs()[i], d.probs()[i]);
}

TEST(Marginalize, RowSums) {
  auto m = marginalize(pair(0.1, 0.2, 0.3, 0.4), {"A"});
  EXPECT_NEAR(m.probs()[0], 0.3, 1e-15);
  EXPECT_NEAR(m.probs()[1], 0.7, 1e-15);
  auto mb = marginalize(pair(0.1, 0.2, 0.3, 0.4), {"B"});
  EXPECT_NEAR(mb.probs()[0], 0.4, 1e-15);
  EXPECT_NEAR(mb.probs()[1], 0.6, 1e-15);
}

TEST(Marginalize, UnknownVariableNamed) {
  try {
    marginalize(pair(0.1, 0.2, 0.3, 0.4), {"Z"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'Z'"), std::string::npos);
  }
  EXPECT_THROW(marginalize(pair(0.1, 0.2, 0.3, 0.4), {}), Error);
}

TEST(Entropy, ReferenceValues) {
  EXPECT_NEAR(entropy(JointDistribution({{"A", 2}}, {0.5, 0.5}), {"A"}), 0.693147, 1e-6);
  EXPECT_EQ(entropy(JointDistribution({{"A", 3}}, {0.0, 1.0, 0.0}), {"A"}), 0.0);
  EXPECT_NEAR(entropy(JointDistribution({{"A", 2}}, {0.25, 0.75}), {"A"}), 0.562335, 1e-6);
  EXPECT_THROW(entropy(JointDistribution({{"A", 2}}, {0.25, 0.75}), {"B"}), Error);
}

TEST(ConditionalEntropy, ReferenceValues) {
  // Independent: H(A | B) = H(A).
  auto ind = pair(0.25 * 0.4, 0.25 * 0.6, 0.75 * 0.4, 0.75 * 0.6);
  EXPECT_NEAR(conditional_entropy(ind, {"A"}, {"B"}), entropy(ind, {"A"}), 1e-14);
  // B a copy of A: H(B | A) = 0.
  EXPECT_EQ(conditional_entropy(pair(0.3, 0.0, 0.0, 0.7), {"B"}, {"A"}), 0.0);
  // Binary symmetric channel with flip 0.1 and uniform input: h(0.1) nats.
  auto bsc = pair(0.45, 0.05, 0.05, 0.45);
  EXPECT_NEAR(conditional_entropy(bsc, {"B"}, {"A"}), 0.325083, 1e-6);
  EXPECT_THROW(conditional_entropy(bsc, {"A"}, {"A"}), Error);
}

TEST(MutualInformation, ReferenceValues) {
  EXPECT_NEAR(mutual_information(pair(0.1, 0.15, 0.3, 0.45), {"A"}, {"B"}), 0.0, 1e-15);
  EXPECT_NEAR(mutual_information(pair(0.5, 0.0, 0.0, 0.5), {"A"}, {"B"}), std::log(2.0), 1e-15);
  EXPECT_THROW(mutual_information(pair(0.5, 0.0, 0.0, 0.5), {"A"}, {"A"}), Error);
  JointDistribution three({{"A", 2}, {"B", 2}, {"C", 2}}, std::vector<double>(8, 0.125));
  EXPECT_THROW(mutual_information(three, {"A"}, {"B"}, {"B"}), Error);
}

TEST(InfoProperties, RandomTables) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Variable> vars{{"Q", 1 + rng.below(3)}, {"X", 1 + rng.below(4)}, {"X_R", 1 + rng.below(4)},
                               {"Y", 1 + rng.below(4)}};
    auto d = random_table(rng, vars);

    // Two code paths: marginalize-then-entropy vs. map enumeration.
    for (const VarSet& s : {VarSet{"Q"}, VarSet{"X", "Y"}, VarSet{"Q", "X_R", "Y"}, VarSet{"Q", "X", "X_R", "Y"}}) {
      EXPECT_NEAR(entropy(d, s), brute_entropy(d, s), 1e-12);
      EXPECT_NEAR(entropy(marginalize(d, s), s), entropy(d, s), 1e-14);
    }

    const double h_a = entropy(d, {"Y"});
    const double h_ab = conditional_entropy(d, {"Y"}, {"X", "Q"});
    EXPECT_GE(h_ab, 0.0);
    EXPECT_LE(h_ab, h_a + 1e-12);

    const double mi_ab = mutual_information(d, {"Y"}, {"X_R"});
    const double mi_ba = mutual_information(d, {"X_R"}, {"Y"});
    EXPECT_GE(mi_ab, -1e-10);
    EXPECT_NEAR(mi_ab, mi_ba, 1e-10);

    // Chain rule, both decompositions.
    const double lhs = mutual_information(d, {"Y"}, {"X_R", "X"}, {"Q"});
    const double route1 = mutual_information(d, {"Y"}, {"X_R"}, {"Q"}) + mutual_information(d, {"Y"}, {"X"}, {"X_R", "Q"});
    const double route2 = mutual_information(d, {"Y"}, {"X"}, {"Q"}) + mutual_information(d, {"Y"}, {"X_R"}, {"X", "Q"});
    EXPECT_NEAR(lhs, route1, 1e-10);
    EXPECT_NEAR(lhs, route2, 1e-10);
  }
}

}  // namespace
}  // namespace eac
