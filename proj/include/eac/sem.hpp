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

// The extract-and-generate causal chain
//
//     {Q, X} -> {Q, X_R} -> Y
//
// with the extractor e and generator g folded, together with their exogenous
// noise, into the channels p(x_r | q, x) and p(y | q, x_r). Everything the
// causal quantities need (interventions, information flow, the confounding
// of irrelevant sentences, optimal risks) is computed exactly from these
// tables.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eac/common.hpp"
#include "eac/info.hpp"

namespace eac {

enum class SemVar { Q, X, XR, Y };

inline constexpr std::array<std::string_view, 4> kSemVarNames = {"Q", "X", "X_R", "Y"};

inline std::string_view name_of(SemVar v) { return kSemVarNames[static_cast<int>(v)]; }

inline SemVar sem_var_from_name(std::string_view name) {
  for (int i = 0; i < 4; ++i)
    if (kSemVarNames[i] == name) return static_cast<SemVar>(i);
  throw Error("unknown SEM variable '" + std::string(name) + "' (expected Q, X, X_R or Y)");
}

// Optional text structure: how each X symbol decomposes into sentence
// symbols, which sentence symbols each X_R symbol extracts, and how each Y
// symbol renders as sentence symbols. Needed only for verbalization.
struct SemLayout {
  std::size_t sentence_vocab = 0;
  std::vector<std::vector<std::size_t>> x_sentences;
  std::vector<std::vector<std::size_t>> r_sentences;
  std::vector<std::vector<std::size_t>> y_sentences;

  friend bool operator==(const SemLayout&, const SemLayout&) = default;
};

struct SemCards {
  std::size_t q = 1, x = 1, r = 1, y = 1;
  friend bool operator==(const SemCards&, const SemCards&) = default;
};

// Immutable structural model. Conditional tables are flattened row-major:
//   x_given_q[q * nx + x], extractor[(q * nx + x) * nr + r],
//   generator[(q * nr + r) * ny + y].
class Sem {
 public:
  Sem(SemCards cards, std::vector<double> q_prior, std::vector<double> x_given_q, std::vector<double> extractor,
      std::vector<double> generator, std::optional<SemLayout> layout = std::nullopt)
      : cards_(cards),
        q_prior_(std::move(q_prior)),
        x_given_q_(std::move(x_given_q)),
        extractor_(std::move(extractor)),
        generator_(std::move(generator)),
        layout_(std::move(layout)) {
    if (cards_.q == 0 || cards_.x == 0 || cards_.r == 0 || cards_.y == 0)
      throw Error("Sem: alphabet cardinalities must be >= 1");
    normalize_rows(q_prior_, 1, cards_.q, "q_prior");
    normalize_rows(x_given_q_, cards_.q, cards_.x, "x_given_q");
    normalize_rows(extractor_, checked_mul(cards_.q, cards_.x), cards_.r, "extractor");
    normalize_rows(generator_, checked_mul(cards_.q, cards_.r), cards_.y, "generator");
    if (layout_) check_layout(*layout_);
  }

  const SemCards& cards() const { return cards_; }
  const std::vector<double>& q_prior() const { return q_prior_; }
  const std::vector<double>& x_given_q() const { return x_given_q_; }
  const std::vector<double>& extractor() const { return extractor_; }
  const std::vector<double>& generator() const { return generator_; }
  const std::optional<SemLayout>& layout() const { return layout_; }

  double p_q(std::size_t q) const { return q_prior_[q]; }
  double p_x(std::size_t q, std::size_t x) const { return x_given_q_[q * cards_.x + x]; }
  double p_r(std::size_t q, std::size_t x, std::size_t r) const {
    return extractor_[(q * cards_.x + x) * cards_.r + r];
  }
  double p_y(std::size_t q, std::size_t r, std::size_t y) const {
    return generator_[(q * cards_.r + r) * cards_.y + y];
  }

  std::size_t cardinality(SemVar v) const {
    switch (v) {
      case SemVar::Q: return cards_.q;
      case SemVar::X: return cards_.x;
      case SemVar::XR: return cards_.r;
      case SemVar::Y: return cards_.y;
    }
    return 0;
  }

  friend bool operator==(const Sem&, const Sem&) = default;

 private:
  static std::size_t checked_mul(std::size_t a, std::size_t b) {
    if (b != 0 && a > kMaxCells / b) throw Error("Sem: table exceeds " + std::to_string(kMaxCells) + " cells");
    return a * b;
  }

  static void normalize_rows(std::vector<double>& table, std::size_t rows, std::size_t width, const char* what) {
    const std::size_t expected = checked_mul(rows, width);
    if (table.size() != expected)
      throw Error(std::string("Sem: ") + what + " has " + std::to_string(table.size()) + " entries, expected " +
                  std::to_string(expected));
    for (std::size_t row = 0; row < rows; ++row) {
      KahanSum total;
      for (std::size_t j = 0; j < width; ++j) {
        const double p = table[row * width + j];
        if (!(p >= 0.0) || !std::isfinite(p))
          throw Error(std::string("Sem: ") + what + " row " + std::to_string(row) + " has a negative entry");
        total.add(p);
      }
      const double deviation = std::abs(total.value() - 1.0);
      if (deviation > kRenormLimit)
        throw Error(std::string("Sem: ") + what + " row " + std::to_string(row) + " sums to " +
                    std::to_string(total.value()));
      if (deviation > 0.0)
        for (std::size_t j = 0; j < width; ++j) table[row * width + j] /= total.value();
    }
  }

  void check_layout(const SemLayout& l) const {
    auto check = [&](const std::vector<std::vector<std::size_t>>& rows, std::size_t expected, const char* what,
                     bool allow_empty_table) {
      if (rows.empty() && allow_empty_table) return;
      if (rows.size() != expected)
        throw Error(std::string("Sem layout: ") + what + " has " + std::to_string(rows.size()) + " rows, expected " +
                    std::to_string(expected));
      for (const auto& row : rows)
        for (std::size_t s : row)
          if (s >= l.sentence_vocab) throw Error(std::string("Sem layout: ") + what + " sentence symbol out of range");
    };
    check(l.x_sentences, cards_.x, "x_sentences", false);
    check(l.r_sentences, cards_.r, "r_sentences", false);
    check(l.y_sentences, cards_.y, "y_sentences", true);
    for (const auto& row : l.x_sentences)
      if (row.empty()) throw Error("Sem layout: every X symbol needs at least one sentence");
  }

  SemCards cards_;
  std::vector<double> q_prior_;
  std::vector<double> x_given_q_;
  std::vector<double> extractor_;
  std::vector<double> generator_;
  std::optional<SemLayout> layout_;
};

struct Intervention {
  SemVar var;
  std::size_t value;
};

namespace detail {

inline std::vector<Variable> sem_variables(const Sem& sem) {
  const auto& c = sem.cards();
  return {{"Q", c.q}, {"X", c.x}, {"X_R", c.r}, {"Y", c.y}};
}

// Joint over (Q, X, X_R, Y) where every variable listed in `fixed` has its
// mechanism replaced by a point mass (truncated factorization).
inline JointDistribution joint_with(const Sem& sem, const std::vector<Intervention>& fixed) {
  std::array<std::optional<std::size_t>, 3> pin{};
  for (const auto& iv : fixed) {
    if (iv.var == SemVar::Y) throw Error("intervene: cannot intervene on Y, it has no downstream effect to measure");
    if (iv.value >= sem.cardinality(iv.var))
      throw Error("intervene: value " + std::to_string(iv.value) + " outside the alphabet of " +
                  std::string(name_of(iv.var)));
    pin[static_cast<int>(iv.var)] = iv.value;
  }
  auto vars = sem_variables(sem);
  const std::size_t cells = JointDistribution::checked_cells(vars);
  const auto& c = sem.cards();
  std::vector<double> probs(cells, 0.0);
  for (std::size_t q = 0; q < c.q; ++q) {
    const double pq = pin[0] ? (q == *pin[0] ? 1.0 : 0.0) : sem.p_q(q);
    if (pq == 0.0) continue;
    for (std::size_t x = 0; x < c.x; ++x) {
      const double px = pin[1] ? (x == *pin[1] ? 1.0 : 0.0) : sem.p_x(q, x);
      if (px == 0.0) continue;
      for (std::size_t r = 0; r < c.r; ++r) {
        const double pr = pin[2] ? (r == *pin[2] ? 1.0 : 0.0) : sem.p_r(q, x, r);
        if (pr == 0.0) continue;
        const double base = pq * px * pr;
        const std::size_t offset = ((q * c.x + x) * c.r + r) * c.y;
        for (std::size_t y = 0; y < c.y; ++y) probs[offset + y] = base * sem.p_y(q, r, y);
      }
    }
  }
  return JointDistribution(std::move(vars), std::move(probs));
}

}  // namespace detail

// p(q, x, x_r, y) = p(q) p(x | q) p(x_r | q, x) p(y | q, x_r).
inline JointDistribution build_joint(const Sem& sem) { return detail::joint_with(sem, {}); }

inline JointDistribution intervene(const Sem& sem, const std::vector<Intervention>& interventions) {
  return detail::joint_with(sem, interventions);
}

inline JointDistribution intervene(const Sem& sem, SemVar var, std::size_t value) {
  return detail::joint_with(sem, {{var, value}});
}

// p(y | do(fixed)) computed directly from the mechanisms, without
// materializing the intervened joint.
inline std::vector<double> interventional_y(const Sem& sem, const std::vector<Intervention>& fixed) {
  std::array<std::optional<std::size_t>, 3> pin{};
  for (const auto& iv : fixed) {
    if (iv.var == SemVar::Y) throw Error("interventional_y: cannot intervene on Y");
    if (iv.value >= sem.cardinality(iv.var)) throw Error("interventional_y: value out of range");
    pin[static_cast<int>(iv.var)] = iv.value;
  }
  const auto& c = sem.cards();
  auto range = [](const std::optional<std::size_t>& p, std::size_t n) {
    return p ? std::pair<std::size_t, std::size_t>{*p, *p + 1} : std::pair<std::size_t, std::size_t>{0, n};
  };
  const auto [q0, q1] = range(pin[0], c.q);
  const auto [x0, x1] = range(pin[1], c.x);
  const auto [r0, r1] = range(pin[2], c.r);
  std::vector<KahanSum> acc(c.y);
  for (std::size_t q = q0; q < q1; ++q) {
    const double pq = pin[0] ? 1.0 : sem.p_q(q);
    if (pq == 0.0) continue;
    // With X_R pinned the X mechanism only matters through its total mass.
    if (pin[2] && !pin[1]) {
      const std::size_t r = *pin[2];
      for (std::size_t y = 0; y < c.y; ++y) acc[y].add(pq * sem.p_y(q, r, y));
      continue;
    }
    for (std::size_t x = x0; x < x1; ++x) {
      const double px = pin[1] ? 1.0 : sem.p_x(q, x);
      if (px == 0.0) continue;
      for (std::size_t r = r0; r < r1; ++r) {
        const double pr = pin[2] ? 1.0 : sem.p_r(q, x, r);
        if (pr == 0.0) continue;
        const double w = pq * px * pr;
        for (std::size_t y = 0; y < c.y; ++y) acc[y].add(w * sem.p_y(q, r, y));
      }
    }
  }
  std::vector<double> out(c.y);
  for (std::size_t y = 0; y < c.y; ++y) out[y] = acc[y].value();
  return out;
}

namespace detail {

inline std::vector<SemVar> parse_sources(const VarSet& sources) {
  if (sources.empty()) throw Error("information_flow: empty source set");
  std::vector<SemVar> out;
  for (const auto& name : sources) {
    const SemVar v = sem_var_from_name(name);
    if (v == SemVar::Y) throw Error("information_flow: Y cannot be a source");
    if (std::find(out.begin(), out.end(), v) != out.end())
      throw Error("information_flow: source '" + name + "' listed twice");
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Information flow from `sources` to Y: like I(S; Y) but with p(y | s)
// replaced by p(y | do(S = s)), weighted by the observational p(s).
inline double information_flow(const Sem& sem, const JointDistribution& joint, const VarSet& sources,
                               const std::string& target = "Y") {
  if (target != "Y") throw Error("information_flow: target must be Y");
  const std::vector<SemVar> src = detail::parse_sources(sources);
  VarSet ordered;
  for (SemVar v : src) ordered.emplace_back(name_of(v));
  const JointDistribution ps = marginalize(joint, ordered);

  const std::size_t ny = sem.cards().y;
  const auto weights = ps.probs();
  std::vector<std::vector<double>> conditionals(weights.size());
  std::vector<KahanSum> mix(ny);
  std::vector<Intervention> fixed(src.size());
  for (std::size_t flat = 0; flat < weights.size(); ++flat) {
    if (weights[flat] == 0.0) continue;
    std::size_t rest = flat;
    for (std::size_t i = src.size(); i-- > 0;) {
      const std::size_t card = sem.cardinality(src[i]);
      fixed[i] = {src[i], rest % card};
      rest /= card;
    }
    conditionals[flat] = interventional_y(sem, fixed);
    for (std::size_t y = 0; y < ny; ++y) mix[y].add(weights[flat] * conditionals[flat][y]);
  }
  KahanSum flow;
  for (std::size_t flat = 0; flat < weights.size(); ++flat) {
    if (weights[flat] == 0.0) continue;
    for (std::size_t y = 0; y < ny; ++y) {
      const double p = conditionals[flat][y];
      if (p > 0.0) flow.add(weights[flat] * p * std::log(p / mix[y].value()));
    }
  }
  return flow.value();
}

inline double information_flow(const Sem& sem, const VarSet& sources, const std::string& target = "Y") {
  return information_flow(sem, build_joint(sem), sources, target);
}

struct CausalReport {
  double flow_full = 0.0;      // I({Q, X} -> Y)
  double flow_relevant = 0.0;  // I({Q, X_R} -> Y)
  double ce_signed = 0.0;      // flow_relevant - flow_full before |.|
  double ce_flow = 0.0;
  double ce_entropy = 0.0;  // H(X_R | X, Q) - H(X_R | X, Q, Y)
  double h_r_given_x = 0.0;
  double h_r_given_xy = 0.0;
  double l_f = 0.0;  // H(Y | Q, X)
  double l_g = 0.0;  // H(Y | Q, X_R)
};

inline constexpr double kIdentityTolerance = 1e-10;

inline CausalReport causal_effect_irrelevant(const Sem& sem, const JointDistribution& joint) {
  CausalReport rep;
  rep.flow_full = information_flow(sem, joint, {"Q", "X"});
  rep.flow_relevant = information_flow(sem, joint, {"Q", "X_R"});
  // The chain makes {Q, X_R} at least as informative about Y as {Q, X}.
  rep.ce_signed = rep.flow_relevant - rep.flow_full;
  if (rep.ce_signed < -kIdentityTolerance)
    throw Error("causal_effect_irrelevant: negative confounding " + std::to_string(rep.ce_signed) +
                " violates the chain structure (internal consistency error)");
  rep.ce_flow = std::abs(rep.ce_signed);
  rep.h_r_given_x = conditional_entropy(joint, {"X_R"}, {"Q", "X"});
  rep.h_r_given_xy = conditional_entropy(joint, {"X_R"}, {"Q", "X", "Y"});
  rep.ce_entropy = rep.h_r_given_x - rep.h_r_given_xy;
  if (rep.ce_entropy < -kIdentityTolerance)
    throw Error("causal_effect_irrelevant: negative entropy gap (internal consistency error)");
  rep.l_f = conditional_entropy(joint, {"Y"}, {"Q", "X"});
  rep.l_g = conditional_entropy(joint, {"Y"}, {"Q", "X_R"});
  return rep;
}

inline CausalReport causal_effect_irrelevant(const Sem& sem) { return causal_effect_irrelevant(sem, build_joint(sem)); }

// ----------------------------------------------------------------------------
// Named examples.

enum class ExampleKind { AllRelevant, FirstOnly, UniformPick };

inline std::string_view to_string(ExampleKind k) {
  switch (k) {
    case ExampleKind::AllRelevant: return "all-relevant";
    case ExampleKind::FirstOnly: return "first-only";
    case ExampleKind::UniformPick: return "uniform-pick";
  }
  return "";
}

inline ExampleKind example_kind_from_string(std::string_view s) {
  if (s == "all-relevant") return ExampleKind::AllRelevant;
  if (s == "first-only") return ExampleKind::FirstOnly;
  if (s == "uniform-pick") return ExampleKind::UniformPick;
  throw Error("unknown example kind '" + std::string(s) + "' (all-relevant, first-only, uniform-pick)");
}

struct ExampleOptions {
  std::size_t n_sentences = 3;
  std::size_t vocab = 0;  // 0 means vocab = n_sentences
  bool distinct = true;   // sentence values drawn without replacement
};

namespace detail {

// Ordered n-tuples over [0, vocab), distinct or with repetition, in
// lexicographic order.
inline std::vector<std::vector<std::size_t>> enumerate_documents(std::size_t n, std::size_t vocab, bool distinct) {
  double count = 1.0;
  for (std::size_t i = 0; i < n; ++i) count *= distinct ? static_cast<double>(vocab - i) : static_cast<double>(vocab);
  if (count > static_cast<double>(kMaxCells))
    throw Error("example_sem: " + std::to_string(static_cast<long double>(count)) + " documents exceed the table cap");
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur;
  std::vector<bool> used(vocab, false);
  auto rec = [&](auto&& self) -> void {
    if (cur.size() == n) {
      out.push_back(cur);
      return;
    }
    for (std::size_t s = 0; s < vocab; ++s) {
      if (distinct && used[s]) continue;
      used[s] = true;
      cur.push_back(s);
      self(self);
      cur.pop_back();
      used[s] = false;
    }
  };
  rec(rec);
  return out;
}

}  // namespace detail

// The three worked examples: every sentence relevant, only the first one
// relevant, or one sentence picked uniformly at random with Y = X_R.
// Q is a single fixed question. X ranges over ordered tuples of sentence
// symbols; X_R is the extracted content and Y copies it.
inline Sem example_sem(ExampleKind kind, const ExampleOptions& opt) {
  const std::size_t n = opt.n_sentences;
  const std::size_t vocab = opt.vocab == 0 ? n : opt.vocab;
  if (n == 0) throw Error("example_sem: n_sentences must be >= 1");
  if (opt.distinct && vocab < n)
    throw Error("example_sem: vocab " + std::to_string(vocab) + " < n_sentences " + std::to_string(n) +
                " in distinct mode");
  const auto docs = detail::enumerate_documents(n, vocab, opt.distinct);
  const std::size_t nx = docs.size();

  SemLayout layout;
  layout.sentence_vocab = vocab;
  layout.x_sentences = docs;

  std::vector<double> q_prior{1.0};
  std::vector<double> x_prior(nx, 1.0 / static_cast<double>(nx));
  std::vector<double> extractor, generator;
  std::size_t nr = 0;

  switch (kind) {
    case ExampleKind::AllRelevant: {
      nr = nx;
      if (nx > kMaxCells / nx) throw Error("example_sem: all-relevant tables exceed the cap; lower n_sentences");
      extractor.assign(nx * nr, 0.0);
      for (std::size_t x = 0; x < nx; ++x) extractor[x * nr + x] = 1.0;
      layout.r_sentences = docs;
      break;
    }
    case ExampleKind::FirstOnly: {
      nr = vocab;
      extractor.assign(nx * nr, 0.0);
      for (std::size_t x = 0; x < nx; ++x) extractor[x * nr + docs[x][0]] = 1.0;
      for (std::size_t s = 0; s < vocab; ++s) layout.r_sentences.push_back({s});
      break;
    }
    case ExampleKind::UniformPick: {
      nr = vocab;
      extractor.assign(nx * nr, 0.0);
      for (std::size_t x = 0; x < nx; ++x)
        for (std::size_t s : docs[x]) extractor[x * nr + s] += 1.0 / static_cast<double>(n);
      for (std::size_t s = 0; s < vocab; ++s) layout.r_sentences.push_back({s});
      break;
    }
  }
  // Y = X_R.
  const std::size_t ny = nr;
  if (nr > kMaxCells / ny) throw Error("example_sem: generator table exceeds the cap");
  generator.assign(nr * ny, 0.0);
  for (std::size_t r = 0; r < nr; ++r) generator[r * ny + r] = 1.0;
  layout.y_sentences = layout.r_sentences;

  return Sem({1, nx, nr, ny}, std::move(q_prior), std::move(x_prior), std::move(extractor), std::move(generator),
             std::move(layout));
}

// ----------------------------------------------------------------------------
// Sampling and fuzzing.

struct SemSample {
  std::size_t q = 0, x = 0, r = 0, y = 0;
  friend bool operator==(const SemSample&, const SemSample&) = default;
};

namespace detail {

inline std::size_t draw_row(Rng& rng, const std::vector<double>& table, std::size_t row, std::size_t width) {
  return rng.categorical(std::span<const double>(table.data() + row * width, width));
}

}  // namespace detail

// Ancestral sample number `index` of the stream identified by `seed`.
inline SemSample sample_sem_one(const Sem& sem, std::uint64_t seed, std::uint64_t index) {
  Rng rng(derive_seed(seed, index));
  const auto& c = sem.cards();
  SemSample s;
  s.q = detail::draw_row(rng, sem.q_prior(), 0, c.q);
  s.x = detail::draw_row(rng, sem.x_given_q(), s.q, c.x);
  s.r = detail::draw_row(rng, sem.extractor(), s.q * c.x + s.x, c.r);
  s.y = detail::draw_row(rng, sem.generator(), s.q * c.r + s.r, c.y);
  return s;
}

inline std::vector<SemSample> sample_sem(const Sem& sem, std::size_t count, std::uint64_t seed, unsigned threads = 1) {
  if (count == 0) throw Error("sample_sem: count must be >= 1");
  std::vector<SemSample> out(count);
  parallel_for(count, threads, [&](std::size_t i) { out[i] = sample_sem_one(sem, seed, i); });
  return out;
}

// Plug-in joint over (Q, X, X_R, Y) from sample frequencies.
inline JointDistribution empirical_joint(const SemCards& c, const std::vector<SemSample>& samples) {
  if (samples.empty()) throw Error("empirical_joint: no samples");
  std::vector<Variable> vars{{"Q", c.q}, {"X", c.x}, {"X_R", c.r}, {"Y", c.y}};
  std::vector<double> probs(JointDistribution::checked_cells(vars), 0.0);
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) probs[((s.q * c.x + s.x) * c.r + s.r) * c.y + s.y] += w;
  return JointDistribution(std::move(vars), std::move(probs));
}

// Every row drawn from a symmetric Dirichlet(concentration).
inline Sem random_sem(const SemCards& c, double concentration, std::uint64_t seed) {
  if (!(concentration > 0.0)) throw Error("random_sem: concentration must be > 0");
  for (std::size_t n : {c.q, c.x, c.r, c.y})
    if (n == 0) throw Error("random_sem: cardinalities must be >= 1");
  {
    std::vector<Variable> vars{{"Q", c.q}, {"X", c.x}, {"X_R", c.r}, {"Y", c.y}};
    JointDistribution::checked_cells(vars);
  }
  Rng rng(mix64(seed));
  auto table = [&](std::size_t rows, std::size_t width) {
    std::vector<double> out(rows * width);
    for (std::size_t row = 0; row < rows; ++row) {
      double total = 0.0;
      while (!(total > 0.0)) {
        total = 0.0;
        for (std::size_t j = 0; j < width; ++j) {
          out[row * width + j] = rng.gamma(concentration);
          total += out[row * width + j];
        }
      }
      for (std::size_t j = 0; j < width; ++j) out[row * width + j] /= total;
    }
    return out;
  };
  auto q = table(1, c.q);
  auto x = table(c.q, c.x);
  auto r = table(c.q * c.x, c.r);
  auto y = table(c.q * c.r, c.y);
  return Sem(c, std::move(q), std::move(x), std::move(r), std::move(y));
}

}  // namespace eac
