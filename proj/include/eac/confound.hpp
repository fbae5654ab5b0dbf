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

// Corpus-level estimate of the confounding effect of irrelevant sentences,
//   CE = H(X_R | X, Q) - H(X_R | X, Q, Y),
// from two relevance classifiers, one blind to the summary and one not.
// Each entropy is replaced by the held-out cross-entropy of its classifier.

#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "eac/corpus.hpp"
#include "eac/text.hpp"

namespace eac {

using SparseVector = std::vector<std::pair<std::uint32_t, double>>;  // sorted by index

inline constexpr std::size_t kDefaultHashDim = std::size_t{1} << 18;
inline constexpr std::size_t kMaxPositionFeature = 15;

namespace detail {

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return mix64(h);
}

class FeatureHasher {
 public:
  FeatureHasher(std::size_t dim, std::uint64_t seed) : mask_(dim - 1), seed_(seed) {}

  void add(const std::string& name, double value) {
    if (value == 0.0) return;
    const std::uint64_t h = fnv1a(name, seed_);
    const auto idx = static_cast<std::uint32_t>(h & mask_);
    acc_[idx] += (h >> 63) ? -value : value;
  }

  void add_ngrams(const char* ns, const std::vector<std::string>& toks) {
    for (std::size_t i = 0; i < toks.size(); ++i) {
      add(std::string(ns) + toks[i], 1.0);
      if (i + 1 < toks.size()) add(std::string(ns) + toks[i] + ' ' + toks[i + 1], 1.0);
    }
  }

  // L2-normalizes everything added so far, then adds `extra` unscaled.
  SparseVector finish(const std::vector<std::pair<std::string, double>>& extra = {}) {
    double norm = 0.0;
    for (const auto& [i, v] : acc_) norm += v * v;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (auto& [i, v] : acc_) v /= norm;
    }
    for (const auto& [name, value] : extra) add(name, value);
    SparseVector out;
    for (const auto& [i, v] : acc_)
      if (v != 0.0) out.emplace_back(i, v);
    return out;
  }

 private:
  std::uint64_t mask_;
  std::uint64_t seed_;
  std::map<std::uint32_t, double> acc_;
};

}  // namespace detail

// Share of the sentence's distinct stems that also occur in the summary.
inline double overlap_ratio(const TokenSeq& sentence, const TokenSeq& summary) {
  const std::set<std::string> s(sentence.stemmed.begin(), sentence.stemmed.end());
  if (s.empty()) return 0.0;
  const std::set<std::string> y(summary.stemmed.begin(), summary.stemmed.end());
  std::size_t hit = 0;
  for (const auto& t : s) hit += y.count(t);
  return static_cast<double>(hit) / static_cast<double>(s.size());
}

// Unigram and bigram counts of the sentence, question and (optionally)
// summary under separate namespaces, hashed with signed hashing and
// L2-normalized. Two features are added after normalization so their scale
// does not shrink with text length: the sentence/summary overlap ratio and
// the sentence's position in its answer.
inline SparseVector featurize(const TokenSeq& sentence, const TokenSeq& question, const TokenSeq* summary,
                              std::size_t hash_dim = kDefaultHashDim, std::optional<std::size_t> position = std::nullopt,
                              std::uint64_t hash_seed = 0) {
  if (hash_dim == 0 || (hash_dim & (hash_dim - 1)) != 0) throw Error("featurize: hash_dim must be a power of two");
  detail::FeatureHasher h(hash_dim, hash_seed);
  h.add_ngrams("s:", sentence.tokens);
  h.add_ngrams("q:", question.tokens);
  std::vector<std::pair<std::string, double>> extra;
  if (summary) {
    h.add_ngrams("y:", summary->tokens);
    extra.emplace_back("overlap", overlap_ratio(sentence, *summary));
  }
  if (position) extra.emplace_back("p:" + std::to_string(std::min(*position, kMaxPositionFeature)), 1.0);
  return h.finish(extra);
}

struct LabeledVector {
  SparseVector x;
  bool y = false;
};

// One answer's sentences as a unit.
struct LabeledAnswer {
  std::vector<LabeledVector> sentences;
  std::size_t example = 0;
};

inline std::vector<LabeledAnswer> featurize_corpus(const std::vector<Example>& corpus, bool uses_summary,
                                                   std::size_t hash_dim, std::uint64_t hash_seed = 0,
                                                   unsigned threads = 1) {
  std::vector<std::vector<LabeledAnswer>> per_example(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const Example& ex = corpus[i];
    if (!ex.labeled()) throw Error("relevance classifier: example " + std::to_string(i) + " lacks labels");
    const TokenSeq q = tokenize(ex.question);
    const TokenSeq y = tokenize(ex.summary);
    for (const auto& a : ex.answers) {
      LabeledAnswer la;
      la.example = i;
      for (std::size_t j = 0; j < a.sentences.size(); ++j)
        la.sentences.push_back(
            {featurize(tokenize(a.sentences[j]), q, uses_summary ? &y : nullptr, hash_dim, j, hash_seed),
             (*a.relevance)[j]});
      per_example[i].push_back(std::move(la));
    }
  });
  std::vector<LabeledAnswer> out;
  for (auto& v : per_example)
    for (auto& a : v) out.push_back(std::move(a));
  return out;
}

struct ClassifierOptions {
  double l2 = 1e-4;
  int epochs = 200;
  double lr = 0.5;
  std::size_t hash_dim = kDefaultHashDim;
};

struct RelevanceClassifier {
  std::vector<double> weights;
  double bias = 0.0;
  std::size_t hash_dim = kDefaultHashDim;
  std::uint64_t hash_seed = 0;
  bool uses_summary = false;

  double logit(const SparseVector& x) const {
    double z = bias;
    for (const auto& [i, v] : x) z += weights[i] * v;
    return z;
  }
};

namespace detail {

// log(1 + e^z) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Binary log loss of label y at logit z.
inline double log_loss(double z, bool y) { return y ? softplus(-z) : softplus(z); }

}  // namespace detail

// Mean log loss plus l2 |w|^2 / 2; the bias is not penalized.
inline double logistic_objective(const RelevanceClassifier& c, const std::vector<LabeledVector>& data, double l2) {
  KahanSum loss;
  for (const auto& d : data) loss.add(detail::log_loss(c.logit(d.x), d.y));
  double sq = 0.0;
  for (double w : c.weights) sq += w * w;
  return loss.value() / static_cast<double>(data.size()) + 0.5 * l2 * sq;
}

// Gradient of the data term only: mean (p - y) x, and mean (p - y) for the bias.
inline std::pair<std::vector<double>, double> logistic_data_gradient(const RelevanceClassifier& c,
                                                                     const std::vector<LabeledVector>& data) {
  std::vector<double> g(c.weights.size(), 0.0);
  double gb = 0.0;
  const double inv = 1.0 / static_cast<double>(data.size());
  for (const auto& d : data) {
    const double r = (detail::sigmoid(c.logit(d.x)) - (d.y ? 1.0 : 0.0)) * inv;
    gb += r;
    for (const auto& [i, v] : d.x) g[i] += r * v;
  }
  return {std::move(g), gb};
}

// Full gradient of logistic_objective.
inline std::pair<std::vector<double>, double> logistic_gradient(const RelevanceClassifier& c,
                                                                const std::vector<LabeledVector>& data, double l2) {
  auto [g, gb] = logistic_data_gradient(c, data);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += l2 * c.weights[i];
  return {std::move(g), gb};
}

// Full-batch gradient descent. The penalty is applied as a proximal step,
// w <- (w - lr g) / (1 + lr l2), which stays stable for very large l2.
inline RelevanceClassifier train_logistic(const std::vector<LabeledVector>& data, bool uses_summary,
                                          const ClassifierOptions& opt, std::uint64_t hash_seed = 0) {
  if (data.empty()) throw Error("train_classifier: no labeled sentences");
  if (!(opt.lr > 0.0) || !(opt.l2 >= 0.0) || opt.epochs < 0) throw Error("train_classifier: bad optimizer settings");
  RelevanceClassifier c;
  c.hash_dim = opt.hash_dim;
  c.hash_seed = hash_seed;
  c.uses_summary = uses_summary;
  c.weights.assign(opt.hash_dim, 0.0);
  std::vector<std::uint32_t> active;
  for (const auto& d : data)
    for (const auto& [i, v] : d.x) active.push_back(i);
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  const double shrink = 1.0 / (1.0 + opt.lr * opt.l2);
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    const auto [g, gb] = logistic_data_gradient(c, data);
    // Untouched coordinates only decay, and they start at zero.
    for (std::uint32_t i : active) c.weights[i] = (c.weights[i] - opt.lr * g[i]) * shrink;
    c.bias -= opt.lr * gb;
  }
  return c;
}

inline RelevanceClassifier train_classifier(const std::vector<Example>& corpus, bool uses_summary,
                                            const ClassifierOptions& opt = {}, unsigned threads = 1) {
  std::vector<LabeledVector> data;
  for (auto& a : featurize_corpus(corpus, uses_summary, opt.hash_dim, 0, threads))
    for (auto& s : a.sentences) data.push_back(std::move(s));
  return train_logistic(data, uses_summary, opt);
}

inline nlohmann::json classifier_to_json(const RelevanceClassifier& c) {
  auto w = nlohmann::json::array();
  for (std::size_t i = 0; i < c.weights.size(); ++i)
    if (c.weights[i] != 0.0) w.push_back({i, c.weights[i]});
  return {{"format", "eac-relevance/1"}, {"hash_dim", c.hash_dim},         {"hash_seed", c.hash_seed},
          {"uses_summary", c.uses_summary}, {"bias", c.bias}, {"weights", std::move(w)}};
}

inline RelevanceClassifier classifier_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "eac-relevance/1") throw Error("classifier: unsupported format");
    RelevanceClassifier c;
    c.hash_dim = j.at("hash_dim").get<std::size_t>();
    if (c.hash_dim == 0 || (c.hash_dim & (c.hash_dim - 1)) != 0) throw Error("classifier: hash_dim must be a power of two");
    c.hash_seed = j.at("hash_seed").get<std::uint64_t>();
    c.uses_summary = j.at("uses_summary").get<bool>();
    c.bias = j.at("bias").get<double>();
    c.weights.assign(c.hash_dim, 0.0);
    for (const auto& e : j.at("weights")) {
      const auto i = e.at(0).get<std::size_t>();
      if (i >= c.hash_dim) throw Error("classifier: weight index out of range");
      c.weights[i] = e.at(1).get<double>();
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("classifier: malformed file: ") + e.what());
  }
}

// How the entropies are scored.
//   PerSentence: each sentence's label is an independent Bernoulli; the unit
//     is a sentence.
//   SetLevel: the relevant subset of an answer is the outcome. Its size k is
//     drawn from an empirical P(k | n) shared by both classifiers, then the
//     subset from the conditional Bernoulli model with odds exp(logit_j):
//       P(S | k) = prod_{j in S} w_j / e_k(w_1..w_n).
//     The unit is an answer.
enum class CeMode { PerSentence, SetLevel };

inline CeMode ce_mode_from_string(const std::string& s) {
  if (s == "per-sentence") return CeMode::PerSentence;
  if (s == "set") return CeMode::SetLevel;
  throw Error("unknown estimator mode '" + s + "' (expected per-sentence or set)");
}

inline const char* to_string(CeMode m) { return m == CeMode::PerSentence ? "per-sentence" : "set"; }

// Empirical distribution of the number of relevant sentences given the
// answer length, add-1/2 smoothed over k = 0..n.
class SubsetSizeModel {
 public:
  SubsetSizeModel() = default;
  explicit SubsetSizeModel(const std::vector<Example>& corpus) {
    for (const auto& ex : corpus)
      for (const auto& a : ex.answers) {
        if (!a.relevance) continue;
        const auto k = static_cast<std::size_t>(std::count(a.relevance->begin(), a.relevance->end(), true));
        auto& row = counts_[a.sentences.size()];
        row.resize(a.sentences.size() + 1, 0.0);
        row[k] += 1.0;
      }
  }

  double log_prob(std::size_t k, std::size_t n) const {
    auto it = counts_.find(n);
    if (it == counts_.end()) return -std::log(static_cast<double>(n + 1));
    const double total = std::accumulate(it->second.begin(), it->second.end(), 0.0);
    return std::log((it->second[k] + 0.5) / (total + 0.5 * static_cast<double>(n + 1)));
  }

 private:
  std::map<std::size_t, std::vector<double>> counts_;
};

namespace detail {

inline double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// log e_k(exp(z_1), ..., exp(z_n)), the k-th elementary symmetric polynomial.
inline double log_elementary_symmetric(const std::vector<double>& z, std::size_t k) {
  std::vector<double> e(k + 1, -INFINITY);
  e[0] = 0.0;
  for (double zj : z)
    for (std::size_t m = k; m >= 1; --m) e[m] = log_add(e[m], e[m - 1] + zj);
  return e[k];
}

}  // namespace detail

// Cross-entropy (nats) of one answer's labels under a classifier.
inline double answer_loss(const RelevanceClassifier& c, const LabeledAnswer& a, CeMode mode,
                          const SubsetSizeModel& sizes) {
  if (mode == CeMode::PerSentence) {
    double s = 0.0;
    for (const auto& x : a.sentences) s += detail::log_loss(c.logit(x.x), x.y);
    return s;
  }
  std::vector<double> z;
  double chosen = 0.0;
  std::size_t k = 0;
  for (const auto& x : a.sentences) {
    z.push_back(c.logit(x.x));
    if (x.y) {
      chosen += z.back();
      ++k;
    }
  }
  return -sizes.log_prob(k, z.size()) - (chosen - detail::log_elementary_symmetric(z, k));
}

struct CeEstimate {
  CeMode mode = CeMode::SetLevel;
  double h1 = 0.0;
  double h2 = 0.0;
  double ce = 0.0;
  double se = 0.0;                   // standard error of ce over units
  std::size_t units = 0;             // sentences or answers
  std::vector<double> per_example;   // mean per-unit loss difference
  std::vector<double> unit_counts;   // units per example; weights that recover ce
};

inline CeEstimate estimate_ce(const RelevanceClassifier& c1, const RelevanceClassifier& c2,
                              const std::vector<Example>& corpus, CeMode mode = CeMode::SetLevel,
                              const SubsetSizeModel& sizes = {}, unsigned threads = 1) {
  if (c1.uses_summary) throw Error("estimate_ce: first classifier must not use the summary");
  if (!c2.uses_summary) throw Error("estimate_ce: second classifier must use the summary");
  if (c1.hash_dim != c2.hash_dim || c1.hash_seed != c2.hash_seed)
    throw Error("estimate_ce: classifiers use different feature hashing");
  if (corpus.empty()) throw Error("estimate_ce: empty corpus");
  const auto f1 = featurize_corpus(corpus, false, c1.hash_dim, c1.hash_seed, threads);
  const auto f2 = featurize_corpus(corpus, true, c2.hash_dim, c2.hash_seed, threads);
  std::vector<double> l1(f1.size()), l2(f1.size());
  parallel_for(f1.size(), threads, [&](std::size_t i) {
    l1[i] = answer_loss(c1, f1[i], mode, sizes);
    l2[i] = answer_loss(c2, f2[i], mode, sizes);
  });

  CeEstimate est;
  est.mode = mode;
  est.per_example.assign(corpus.size(), 0.0);
  est.unit_counts.assign(corpus.size(), 0.0);
  KahanSum s1, s2, sd, sdd;
  for (std::size_t i = 0; i < f1.size(); ++i) {
    const double units = mode == CeMode::PerSentence ? static_cast<double>(f1[i].sentences.size()) : 1.0;
    s1.add(l1[i]);
    s2.add(l2[i]);
    est.per_example[f1[i].example] += l1[i] - l2[i];
    est.unit_counts[f1[i].example] += units;
    est.units += static_cast<std::size_t>(units);
  }
  const double n = static_cast<double>(est.units);
  if (est.units == 0) throw Error("estimate_ce: no sentences");
  est.h1 = s1.value() / n;
  est.h2 = s2.value() / n;
  est.ce = est.h1 - est.h2;
  for (std::size_t e = 0; e < corpus.size(); ++e)
    if (est.unit_counts[e] > 0) est.per_example[e] /= est.unit_counts[e];

  // Spread of the per-unit differences.
  auto add_unit = [&](double d) {
    sd.add(d);
    sdd.add((d - est.ce) * (d - est.ce));
  };
  for (std::size_t i = 0; i < f1.size(); ++i) {
    if (mode == CeMode::SetLevel) {
      add_unit(l1[i] - l2[i]);
      continue;
    }
    for (std::size_t j = 0; j < f1[i].sentences.size(); ++j)
      add_unit(detail::log_loss(c1.logit(f1[i].sentences[j].x), f1[i].sentences[j].y) -
               detail::log_loss(c2.logit(f2[i].sentences[j].x), f2[i].sentences[j].y));
  }
  est.se = n > 1 ? std::sqrt(sdd.value() / (n - 1) / n) : 0.0;
  return est;
}

// Seeded split into (train, held-out); `held_out` is the held-out share.
inline std::pair<std::vector<Example>, std::vector<Example>> split_corpus(const std::vector<Example>& corpus,
                                                                          double held_out, std::uint64_t seed) {
  if (!(held_out > 0.0 && held_out < 1.0)) throw Error("split_corpus: held-out share must be in (0, 1)");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  const auto n_test = static_cast<std::size_t>(std::llround(held_out * static_cast<double>(corpus.size())));
  std::vector<Example> train, test;
  for (std::size_t i = 0; i < order.size(); ++i) (i < n_test ? test : train).push_back(corpus[order[i]]);
  return {std::move(train), std::move(test)};
}

struct CePipelineResult {
  RelevanceClassifier c1, c2;
  CeEstimate estimate;
  std::size_t train_examples = 0, test_examples = 0;
};

// Split, train both classifiers on the training part, score the rest.
inline CePipelineResult estimate_ce_from_corpus(const std::vector<Example>& corpus, std::uint64_t split_seed,
                                                const ClassifierOptions& opt = {}, CeMode mode = CeMode::SetLevel,
                                                double held_out = 0.2, unsigned threads = 1) {
  auto [train, test] = split_corpus(corpus, held_out, split_seed);
  if (train.empty() || test.empty()) throw Error("estimate_ce: corpus too small to split");
  CePipelineResult r;
  r.train_examples = train.size();
  r.test_examples = test.size();
  r.c1 = train_classifier(train, false, opt, threads);
  r.c2 = train_classifier(train, true, opt, threads);
  r.estimate = estimate_ce(r.c1, r.c2, test, mode, SubsetSizeModel(train), threads);
  return r;
}

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  // two-sided
  bool significant = false;
};

inline double sample_mean(std::span<const double> xs) {
  KahanSum s;
  for (double v : xs) s.add(v);
  return s.value() / static_cast<double>(xs.size());
}

inline double sample_variance(std::span<const double> xs) {
  const double m = sample_mean(xs);
  KahanSum s;
  for (double v : xs) s.add((v - m) * (v - m));
  return s.value() / static_cast<double>(xs.size() - 1);
}

// Welch's unequal-variance t test at level 0.05. Two constant samples give
// t = 0 when their means agree and t = +-DBL_MAX (significant) otherwise.
inline WelchResult welch_t(std::span<const double> a, std::span<const double> b, double alpha = 0.05) {
  if (a.size() < 2 || b.size() < 2) throw Error("welch_t: each sample needs at least two values");
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double ma = sample_mean(a), mb = sample_mean(b);
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  WelchResult r;
  if (va + vb == 0.0) {
    r.df = na + nb - 2.0;
    if (ma == mb) return r;
    r.t = ma > mb ? DBL_MAX : -DBL_MAX;
    r.p_value = 0.0;
    r.significant = true;
    return r;
  }
  r.t = (ma - mb) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  r.significant = r.p_value < alpha;
  return r;
}

struct MetricDeltas {
  std::string name;
  std::vector<double> values;  // per example, aligned with the CE list
  double display_scale = 1.0;
};

struct GroupComparison {
  std::string name;
  double display_scale = 1.0;
  double top_mean = 0.0, top_se = 0.0;
  double bottom_mean = 0.0, bottom_se = 0.0;
  WelchResult welch;
};

struct TopBottomReport {
  std::size_t k = 0;
  std::vector<std::size_t> top, bottom;  // example indices, highest / lowest CE first
  std::vector<GroupComparison> metrics;
};

// Compares metric deltas between the k examples with the largest and the k
// with the smallest per-example CE. Examples are ranked by CE, ties by
// index, so the two groups never overlap.
inline TopBottomReport top_bottom_report(std::span<const double> per_example_ce,
                                         const std::vector<MetricDeltas>& metrics, std::size_t k) {
  if (k == 0) throw Error("top_bottom_report: k must be >= 1");
  if (2 * k > per_example_ce.size()) throw Error("top_bottom_report: 2k exceeds the number of examples");
  for (const auto& m : metrics)
    if (m.values.size() != per_example_ce.size()) throw Error("top_bottom_report: '" + m.name + "' is misaligned");
  std::vector<std::size_t> order(per_example_ce.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return per_example_ce[a] > per_example_ce[b]; });
  TopBottomReport r;
  r.k = k;
  r.top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  r.bottom.assign(order.rbegin(), order.rbegin() + static_cast<std::ptrdiff_t>(k));
  for (const auto& m : metrics) {
    std::vector<double> top, bottom;
    for (std::size_t i : r.top) top.push_back(m.values[i]);
    for (std::size_t i : r.bottom) bottom.push_back(m.values[i]);
    GroupComparison g;
    g.name = m.name;
    g.display_scale = m.display_scale;
    g.top_mean = sample_mean(top);
    g.bottom_mean = sample_mean(bottom);
    if (k >= 2) {
      g.top_se = std::sqrt(sample_variance(top) / static_cast<double>(k));
      g.bottom_se = std::sqrt(sample_variance(bottom) / static_cast<double>(k));
      g.welch = welch_t(top, bottom);
    }  // single-example groups have no spread to test
    r.metrics.push_back(std::move(g));
  }
  return r;
}

}  // namespace eac
