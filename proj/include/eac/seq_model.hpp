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

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "eac/common.hpp"

namespace eac {

using Tokens = std::vector<std::string>;

inline const std::string kEos = "</s>";
inline const std::string kUnk = "<unk>";

// A conditional distribution over output token sequences. Every output is
// terminated by the end-of-sequence token, which is scored like any other.
class SequenceModel {
 public:
  virtual ~SequenceModel() = default;

  // Output vocabulary, end-of-sequence included.
  virtual const std::vector<std::string>& vocabulary() const = 0;
  // Index into vocabulary(); unknown strings map to the model's fallback class.
  virtual std::size_t token_id(const std::string& token) const = 0;
  virtual std::size_t eos_id() const = 0;
  // log p(next | input, prefix) for every vocabulary entry.
  virtual std::vector<double> next_log_probs(std::span<const std::string> input,
                                             std::span<const std::string> prefix) const = 0;
  // Entries generation may emit; the unknown class usually may not.
  virtual bool generatable(std::size_t id) const { return id < vocabulary().size(); }

  // Sum of per-step log-probabilities including the final end-of-sequence.
  virtual double log_prob(std::span<const std::string> input, std::span<const std::string> output) const {
    double total = 0.0;
    for (std::size_t t = 0; t <= output.size(); ++t) {
      const auto lp = next_log_probs(input, output.first(t));
      total += lp[t < output.size() ? token_id(output[t]) : eos_id()];
    }
    return total;
  }
};

inline double log_likelihood(const SequenceModel& model, std::span<const std::string> input,
                             std::span<const std::string> output) {
  return model.log_prob(input, output);
}

// Argmax decoding; ties go to the lexicographically smallest token.
inline Tokens generate_greedy(const SequenceModel& model, std::span<const std::string> input, std::size_t max_len) {
  if (max_len == 0) throw Error("generate_greedy: max_len must be >= 1");
  const auto& vocab = model.vocabulary();
  Tokens out;
  while (out.size() < max_len) {
    const auto lp = model.next_log_probs(input, out);
    std::size_t best = vocab.size();
    for (std::size_t id = 0; id < vocab.size(); ++id) {
      if (!model.generatable(id)) continue;
      if (best == vocab.size() || lp[id] > lp[best] || (lp[id] == lp[best] && vocab[id] < vocab[best])) best = id;
    }
    if (best == vocab.size() || best == model.eos_id()) break;
    out.push_back(vocab[best]);
  }
  return out;
}

// Every output has the same probability: |vocabulary|^-(length + 1).
class UniformModel final : public SequenceModel {
 public:
  explicit UniformModel(std::vector<std::string> vocab) : vocab_(std::move(vocab)) {
    eos_ = static_cast<std::size_t>(std::find(vocab_.begin(), vocab_.end(), kEos) - vocab_.begin());
    if (eos_ == vocab_.size()) vocab_.push_back(kEos);
  }
  const std::vector<std::string>& vocabulary() const override { return vocab_; }
  std::size_t token_id(const std::string& token) const override {
    for (std::size_t i = 0; i < vocab_.size(); ++i)
      if (vocab_[i] == token) return i;
    return 0;
  }
  std::size_t eos_id() const override { return eos_; }
  std::vector<double> next_log_probs(std::span<const std::string>, std::span<const std::string>) const override {
    return std::vector<double>(vocab_.size(), -std::log(static_cast<double>(vocab_.size())));
  }

 private:
  std::vector<std::string> vocab_;
  std::size_t eos_ = 0;
};

}  // namespace eac
