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

// Summary evaluation metrics: ROUGE-N, ROUGE-L, a WordNet-free METEOR,
// the cluster-coverage Perspective score, and Spearman correlation.

#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "eac/text.hpp"

namespace eac {

struct Score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static Score from_counts(double overlap, double candidate_total, double reference_total) {
    Score s;
    s.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
    s.recall = reference_total > 0 ? overlap / reference_total : 0.0;
    s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
  }
};

namespace detail {

inline std::map<std::vector<std::string>, int> ngram_counts(const std::vector<std::string>& toks, std::size_t n) {
  std::map<std::vector<std::string>, int> counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i)
    ++counts[std::vector<std::string>(toks.begin() + static_cast<std::ptrdiff_t>(i),
                                      toks.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace detail

// Clipped n-gram overlap.
inline Score rouge_n(const TokenSeq& candidate, const TokenSeq& reference, std::size_t n, bool use_stems = true) {
  if (n == 0) throw Error("rouge_n: n must be >= 1");
  const auto& c = candidate.view(use_stems);
  const auto& r = reference.view(use_stems);
  const auto cc = detail::ngram_counts(c, n);
  const auto rc = detail::ngram_counts(r, n);
  double overlap = 0.0;
  for (const auto& [gram, count] : cc) {
    auto it = rc.find(gram);
    if (it != rc.end()) overlap += std::min(count, it->second);
  }
  const double c_total = c.size() >= n ? static_cast<double>(c.size() - n + 1) : 0.0;
  const double r_total = r.size() >= n ? static_cast<double>(r.size() - n + 1) : 0.0;
  return Score::from_counts(overlap, c_total, r_total);
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

// Single-sequence (summary-level) LCS.
inline Score rouge_l(const TokenSeq& candidate, const TokenSeq& reference, bool use_stems = true) {
  const auto& c = candidate.view(use_stems);
  const auto& r = reference.view(use_stems);
  return Score::from_counts(static_cast<double>(lcs_length(c, r)), static_cast<double>(c.size()),
                            static_cast<double>(r.size()));
}

struct MeteorParams {
  double alpha = 0.9;
  double beta = 3.0;
  double gamma = 0.5;
};

struct MeteorAlignment {
  std::vector<int> ref_of_candidate;  // -1 when unaligned
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

// Two matching stages, exact surface form then Porter stem. Within a stage
// candidate tokens are visited left to right; each takes the free reference
// position that continues the previous candidate token's chunk if there is
// one, otherwise the leftmost free position.
inline MeteorAlignment meteor_align(const TokenSeq& candidate, const TokenSeq& reference) {
  MeteorAlignment a;
  a.ref_of_candidate.assign(candidate.size(), -1);
  std::vector<bool> used(reference.size(), false);
  for (bool stems : {false, true}) {
    const auto& c = candidate.view(stems);
    const auto& r = reference.view(stems);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (a.ref_of_candidate[i] >= 0) continue;
      int pick = -1;
      if (i > 0 && a.ref_of_candidate[i - 1] >= 0) {
        const std::size_t next = static_cast<std::size_t>(a.ref_of_candidate[i - 1]) + 1;
        if (next < r.size() && !used[next] && r[next] == c[i]) pick = static_cast<int>(next);
      }
      for (std::size_t j = 0; pick < 0 && j < r.size(); ++j)
        if (!used[j] && r[j] == c[i]) pick = static_cast<int>(j);
      if (pick >= 0) {
        a.ref_of_candidate[i] = pick;
        used[static_cast<std::size_t>(pick)] = true;
      }
    }
  }
  int prev = -2;
  bool in_chunk = false;
  for (int ref : a.ref_of_candidate) {
    if (ref < 0) {
      in_chunk = false;
      continue;
    }
    ++a.matches;
    if (!in_chunk || ref != prev + 1) ++a.chunks;
    in_chunk = true;
    prev = ref;
  }
  return a;
}

inline double meteor_lite(const TokenSeq& candidate, const TokenSeq& reference, const MeteorParams& p = {}) {
  const MeteorAlignment a = meteor_align(candidate, reference);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double precision = m / static_cast<double>(candidate.size());
  const double recall = m / static_cast<double>(reference.size());
  const double f_mean = precision * recall / (p.alpha * precision + (1.0 - p.alpha) * recall);
  const double penalty = p.gamma * std::pow(static_cast<double>(a.chunks) / m, p.beta);
  return f_mean * (1.0 - penalty);
}

// Mean ROUGE-1 recall of the candidate against each cluster summary.
inline double perspective(const TokenSeq& candidate, std::span<const TokenSeq> cluster_summaries,
                          bool use_stems = true) {
  if (cluster_summaries.empty()) throw Error("perspective: no cluster summaries");
  double total = 0.0;
  for (const auto& s : cluster_summaries) total += rouge_n(candidate, s, 1, use_stems).recall;
  return total / static_cast<double>(cluster_summaries.size());
}

// Ranks starting at 1; ties share the mean of the positions they occupy.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("pearson: length mismatch");
  if (xs.size() < 2) throw Error("pearson: need at least two points");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("correlation undefined for a constant input vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error("spearman: length mismatch");
  if (xs.size() < 2) throw Error("spearman: need at least two points");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

}  // namespace eac
