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

// Conditional n-gram sequence model with a copy component.
//
// The next-token distribution is
//
//   p(EOS)         = p_ng(EOS | h)
//   p(y), y != EOS = (1 - l) p_ng(y | h) + l (1 - p_ng(EOS | h)) p_copy(y | input)
//
// where p_ng is an add-alpha n-gram over the last order-1 target tokens
// (plus the input's task tag, see below) and p_copy is add-alpha relative
// frequency over the input tokens that ever occur in a training output.
// Letting the n-gram alone decide when to stop keeps output length
// independent of l, and restricting the copy bag keeps markup such as
// prefixes and separators out of generated text.
//
// A leading input token ending in ':' ("summarize:", "generate:") is a task
// tag and becomes part of every n-gram context, so one model can serve
// several tasks.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "eac/seq_model.hpp"

namespace eac {

struct NgramOptions {
  int order = 3;
  double alpha = 0.01;
  double copy_weight = 0.5;
};

using TrainingPair = std::pair<Tokens, Tokens>;

class NgramSeq2Seq final : public SequenceModel {
 public:
  static constexpr std::int32_t kBoundary = -1;  // BOS padding, or "no task tag"
  static constexpr const char* kFormat = "eac-ngram/1";

  explicit NgramSeq2Seq(NgramOptions opt = {}) : opt_(opt) {
    if (opt_.order < 1) throw Error("ngram: order must be >= 1");
    if (!(opt_.alpha > 0.0) || !std::isfinite(opt_.alpha)) throw Error("ngram: alpha must be > 0");
    if (!(opt_.copy_weight >= 0.0 && opt_.copy_weight <= 1.0)) throw Error("ngram: copy_weight must be in [0, 1]");
    add_token(kEos);
    add_token(kUnk);
  }

  const NgramOptions& options() const { return opt_; }
  double copy_weight() const { return opt_.copy_weight; }

  // Same counts, different mixing weight.
  NgramSeq2Seq with_copy_weight(double lambda) const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error("ngram: copy_weight must be in [0, 1]");
    NgramSeq2Seq m = *this;
    m.opt_.copy_weight = lambda;
    return m;
  }

  // Adds the pairs' counts. Calling twice with the same data is one more epoch.
  void update(const std::vector<TrainingPair>& pairs) {
    for (const auto& [in, out] : pairs) {
      for (const auto& t : in) add_token(t);
      for (const auto& t : out) copyable_[add_token(t)] = true;
    }
    for (const auto& [in, out] : pairs) {
      const std::int32_t tag = task_tag(in);
      std::vector<std::int32_t> history;
      for (std::size_t t = 0; t <= out.size(); ++t) {
        const std::int32_t next = t < out.size() ? id_of(out[t]) : eos_;
        Row& row = rows_[context(tag, history)];
        ++row.total;
        ++row.next[next];
        history.push_back(next);
      }
    }
    trained_ = true;
  }

  bool trained() const { return trained_; }

  const std::vector<std::string>& vocabulary() const override { return vocab_; }
  std::size_t token_id(const std::string& token) const override { return static_cast<std::size_t>(id_of(token)); }
  std::size_t eos_id() const override { return static_cast<std::size_t>(eos_); }
  bool generatable(std::size_t id) const override {
    return id < vocab_.size() && static_cast<std::int32_t>(id) != unk_;
  }

  std::vector<double> next_log_probs(std::span<const std::string> input,
                                     std::span<const std::string> prefix) const override {
    const Bag bag = make_bag(input);
    std::vector<std::int32_t> history;
    history.reserve(prefix.size());
    for (const auto& t : prefix) history.push_back(id_of(t));
    const auto ctx = context(task_tag(input), history);
    const Row* row = find_row(ctx);
    std::vector<double> out(vocab_.size());
    for (std::size_t id = 0; id < vocab_.size(); ++id) out[id] = std::log(prob(row, bag, static_cast<std::int32_t>(id)));
    return out;
  }

  double log_prob(std::span<const std::string> input, std::span<const std::string> output) const override {
    const Bag bag = make_bag(input);
    const std::int32_t tag = task_tag(input);
    std::vector<std::int32_t> history;
    history.reserve(output.size());
    double total = 0.0;
    for (std::size_t t = 0; t <= output.size(); ++t) {
      const std::int32_t next = t < output.size() ? id_of(output[t]) : eos_;
      total += std::log(prob(find_row(context(tag, history)), bag, next));
      history.push_back(next);
    }
    return total;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = kFormat;
    j["order"] = opt_.order;
    j["alpha"] = opt_.alpha;
    j["copy_weight"] = opt_.copy_weight;
    j["vocab"] = vocab_;
    std::vector<std::int32_t> copy_ids;
    for (std::size_t i = 0; i < copyable_.size(); ++i)
      if (copyable_[i]) copy_ids.push_back(static_cast<std::int32_t>(i));
    j["copyable"] = copy_ids;
    auto rows = nlohmann::json::array();
    for (const auto& [ctx, row] : rows_) {
      auto next = nlohmann::json::array();
      for (const auto& [id, c] : row.next) next.push_back({id, c});
      rows.push_back({{"context", ctx}, {"next", next}});
    }
    j["rows"] = std::move(rows);
    return j;
  }

  static NgramSeq2Seq from_json(const nlohmann::json& j) {
    try {
      if (j.at("format").get<std::string>() != kFormat) throw Error("ngram: unsupported format");
      NgramOptions opt;
      opt.order = j.at("order").get<int>();
      opt.alpha = j.at("alpha").get<double>();
      opt.copy_weight = j.at("copy_weight").get<double>();
      NgramSeq2Seq m(opt);
      m.vocab_.clear();
      m.ids_.clear();
      m.copyable_.clear();
      for (const auto& t : j.at("vocab").get<std::vector<std::string>>()) {
        if (m.ids_.count(t)) throw Error("ngram: duplicate vocabulary entry '" + t + "'");
        m.add_token(t);
      }
      if (!m.ids_.count(kEos) || !m.ids_.count(kUnk)) throw Error("ngram: vocabulary lacks reserved tokens");
      m.eos_ = m.ids_.at(kEos);
      m.unk_ = m.ids_.at(kUnk);
      const auto n = static_cast<std::int32_t>(m.vocab_.size());
      for (auto id : j.at("copyable").get<std::vector<std::int32_t>>()) {
        if (id < 0 || id >= n) throw Error("ngram: copyable id out of range");
        m.copyable_[static_cast<std::size_t>(id)] = true;
      }
      const std::size_t ctx_len = static_cast<std::size_t>(opt.order);
      for (const auto& r : j.at("rows")) {
        auto ctx = r.at("context").get<std::vector<std::int32_t>>();
        if (ctx.size() != ctx_len) throw Error("ngram: context length mismatch");
        for (auto id : ctx)
          if (id < kBoundary || id >= n) throw Error("ngram: context id out of range");
        Row row;
        for (const auto& e : r.at("next")) {
          const auto id = e.at(0).get<std::int32_t>();
          const auto c = e.at(1).get<std::uint64_t>();
          if (id < 0 || id >= n || c == 0) throw Error("ngram: bad count entry");
          row.next[id] += c;
          row.total += c;
        }
        m.rows_[std::move(ctx)] = std::move(row);
      }
      m.trained_ = !m.rows_.empty();
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw Error(std::string("ngram: malformed model file: ") + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out << to_json().dump() << '\n';
  }

  static NgramSeq2Seq load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(path + ": " + e.what());
    }
    return from_json(j);
  }

 private:
  struct Row {
    std::uint64_t total = 0;
    std::map<std::int32_t, std::uint64_t> next;
  };
  struct Bag {
    std::unordered_map<std::int32_t, double> counts;
    double total = 0.0;
  };

  std::int32_t add_token(const std::string& t) {
    auto [it, inserted] = ids_.emplace(t, static_cast<std::int32_t>(vocab_.size()));
    if (inserted) {
      vocab_.push_back(t);
      copyable_.push_back(false);
      if (t == kEos) eos_ = it->second;
      if (t == kUnk) unk_ = it->second;
    }
    return it->second;
  }

  std::int32_t id_of(const std::string& t) const {
    auto it = ids_.find(t);
    return it == ids_.end() ? unk_ : it->second;
  }

  static bool is_tag(const std::string& t) { return t.size() > 1 && t.back() == ':'; }

  std::int32_t task_tag(std::span<const std::string> input) const {
    return !input.empty() && is_tag(input.front()) ? id_of(input.front()) : kBoundary;
  }

  // [tag, h_{t-order+1}, ..., h_{t-1}], padded with kBoundary.
  std::vector<std::int32_t> context(std::int32_t tag, const std::vector<std::int32_t>& history) const {
    const std::size_t span = static_cast<std::size_t>(opt_.order - 1);
    std::vector<std::int32_t> ctx(span + 1, kBoundary);
    ctx[0] = tag;
    for (std::size_t i = 0; i < span && i < history.size(); ++i) ctx[span - i] = history[history.size() - 1 - i];
    return ctx;
  }

  const Row* find_row(const std::vector<std::int32_t>& ctx) const {
    auto it = rows_.find(ctx);
    return it == rows_.end() ? nullptr : &it->second;
  }

  Bag make_bag(std::span<const std::string> input) const {
    Bag bag;
    for (const auto& t : input) {
      const std::int32_t id = id_of(t);
      if (!copyable_[static_cast<std::size_t>(id)]) continue;
      bag.counts[id] += 1.0;
      bag.total += 1.0;
    }
    return bag;
  }

  double ngram_prob(const Row* row, std::int32_t id) const {
    const double v = static_cast<double>(vocab_.size());
    double c = 0.0, total = 0.0;
    if (row) {
      total = static_cast<double>(row->total);
      auto it = row->next.find(id);
      if (it != row->next.end()) c = static_cast<double>(it->second);
    }
    return (c + opt_.alpha) / (total + opt_.alpha * v);
  }

  double copy_prob(const Bag& bag, std::int32_t id) const {
    auto it = bag.counts.find(id);
    const double c = it == bag.counts.end() ? 0.0 : it->second;
    return (c + opt_.alpha) / (bag.total + opt_.alpha * static_cast<double>(vocab_.size() - 1));
  }

  double prob(const Row* row, const Bag& bag, std::int32_t id) const {
    const double p_eos = ngram_prob(row, eos_);
    if (id == eos_) return p_eos;
    const double lambda = opt_.copy_weight;
    return (1.0 - lambda) * ngram_prob(row, id) + lambda * (1.0 - p_eos) * copy_prob(bag, id);
  }

  NgramOptions opt_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::int32_t> ids_;
  std::vector<bool> copyable_;
  std::map<std::vector<std::int32_t>, Row> rows_;
  std::int32_t eos_ = 0;
  std::int32_t unk_ = 0;
  bool trained_ = false;
};

inline NgramSeq2Seq train_ngram(const std::vector<TrainingPair>& pairs, const NgramOptions& opt = {}) {
  if (pairs.empty()) throw Error("train_ngram: no training pairs");
  NgramSeq2Seq m(opt);
  m.update(pairs);
  return m;
}

inline double mean_log_likelihood(const SequenceModel& model, const std::vector<TrainingPair>& pairs,
                                  unsigned threads = 1) {
  if (pairs.empty()) throw Error("mean_log_likelihood: no pairs");
  std::vector<double> ll(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) { ll[i] = model.log_prob(pairs[i].first, pairs[i].second); });
  KahanSum s;
  for (double v : ll) s.add(v);
  return s.value() / static_cast<double>(pairs.size());
}

inline const std::vector<double>& default_copy_grid() {
  static const std::vector<double> grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99};
  return grid;
}

// Copy weight from `grid` with the best mean held-out log-likelihood;
// the first one wins ties.
inline double tune_copy_weight(const NgramSeq2Seq& model, const std::vector<TrainingPair>& validation,
                               const std::vector<double>& grid = default_copy_grid(), unsigned threads = 1) {
  if (grid.empty()) throw Error("tune_copy_weight: empty grid");
  double best = grid.front();
  double best_ll = -std::numeric_limits<double>::infinity();
  for (double lambda : grid) {
    const double ll = mean_log_likelihood(model.with_copy_weight(lambda), validation, threads);
    if (ll > best_ll) {
      best_ll = ll;
      best = lambda;
    }
  }
  return best;
}

// Chooses the copy weight on a seeded tenth of the pairs, then trains on all
// of them with it. With a single pair the weight in `opt` is kept.
inline NgramSeq2Seq train_ngram_tuned(const std::vector<TrainingPair>& pairs, NgramOptions opt, std::uint64_t seed,
                                      unsigned threads = 1) {
  if (pairs.size() >= 2) {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const std::size_t n_val = std::max<std::size_t>(1, pairs.size() / 10);
    std::vector<TrainingPair> fit, val;
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_val ? val : fit).push_back(pairs[order[i]]);
    opt.copy_weight = tune_copy_weight(train_ngram(fit, opt), val, default_copy_grid(), threads);
  }
  return train_ngram(pairs, opt);
}

}  // namespace eac
