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

// Exact information measures over dense discrete joint distributions.
// All quantities are in nats.

#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "eac/common.hpp"

namespace eac {

struct Variable {
  std::string name;
  std::size_t cardinality = 0;

  friend bool operator==(const Variable&, const Variable&) = default;
};

using VarSet = std::vector<std::string>;

inline constexpr std::size_t kMaxCells = 10'000'000;
inline constexpr double kNormTolerance = 1e-9;
inline constexpr double kRenormLimit = 1e-6;

// Immutable probability table over named finite variables, row-major in the
// order of `variables()` (last variable varies fastest).
class JointDistribution {
 public:
  JointDistribution(std::vector<Variable> variables, std::vector<double> probs)
      : variables_(std::move(variables)), probs_(std::move(probs)) {
    const std::size_t cells = checked_cells(variables_);
    if (probs_.size() != cells)
      throw Error("JointDistribution: expected " + std::to_string(cells) + " probabilities, got " +
                  std::to_string(probs_.size()));
    KahanSum total;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) throw Error("JointDistribution: negative or non-finite probability");
      total.add(p);
    }
    const double deviation = std::abs(total.value() - 1.0);
    if (deviation > kRenormLimit)
      throw Error("JointDistribution: probabilities sum to " + std::to_string(total.value()));
    if (deviation > 0.0)
      for (double& p : probs_) p /= total.value();
  }

  const std::vector<Variable>& variables() const { return variables_; }
  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i].name == name) return i;
    throw Error("unknown variable '" + name + "'");
  }

  bool has(const std::string& name) const {
    for (const auto& v : variables_)
      if (v.name == name) return true;
    return false;
  }

  // Probability of a full assignment given in variable order.
  double at(std::span<const std::size_t> values) const {
    if (values.size() != variables_.size()) throw Error("JointDistribution::at: wrong arity");
    std::size_t flat = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i] >= variables_[i].cardinality) throw Error("JointDistribution::at: value out of range");
      flat = flat * variables_[i].cardinality + values[i];
    }
    return probs_[flat];
  }
  double at(std::initializer_list<std::size_t> values) const {
    return at(std::span<const std::size_t>(values.begin(), values.size()));
  }

  static std::size_t checked_cells(const std::vector<Variable>& vars) {
    if (vars.empty()) throw Error("JointDistribution: no variables");
    std::size_t cells = 1;
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i].cardinality == 0) throw Error("variable '" + vars[i].name + "' has cardinality 0");
      for (std::size_t j = 0; j < i; ++j)
        if (vars[j].name == vars[i].name) throw Error("duplicate variable name '" + vars[i].name + "'");
      if (cells > kMaxCells / vars[i].cardinality)
        throw Error("JointDistribution: table exceeds " + std::to_string(kMaxCells) + " cells");
      cells *= vars[i].cardinality;
    }
    return cells;
  }

 private:
  struct Trusted {};
  JointDistribution(Trusted, std::vector<Variable> variables, std::vector<double> probs)
      : variables_(std::move(variables)), probs_(std::move(probs)) {}

  friend JointDistribution marginalize(const JointDistribution&, const VarSet&);

  std::vector<Variable> variables_;
  std::vector<double> probs_;
};

namespace detail {

inline void require_disjoint(const VarSet& a, const VarSet& b, const char* what) {
  for (const auto& x : a)
    for (const auto& y : b)
      if (x == y) throw Error(std::string(what) + ": variable '" + x + "' appears in overlapping sets");
}

inline VarSet set_union(const VarSet& a, const VarSet& b) {
  VarSet out = a;
  for (const auto& y : b)
    if (std::find(out.begin(), out.end(), y) == out.end()) out.push_back(y);
  return out;
}

}  // namespace detail

// Distribution over exactly `keep`, in the joint's variable order.
inline JointDistribution marginalize(const JointDistribution& dist, const VarSet& keep) {
  if (keep.empty()) throw Error("marginalize: keep set is empty");
  const auto& vars = dist.variables();
  std::vector<bool> kept(vars.size(), false);
  for (const auto& name : keep) {
    const std::size_t i = dist.index_of(name);
    if (kept[i]) throw Error("marginalize: variable '" + name + "' listed twice");
    kept[i] = true;
  }
  std::vector<Variable> out_vars;
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (kept[i]) out_vars.push_back(vars[i]);
  if (out_vars.size() == vars.size()) return dist;

  // Stride of each input axis within the output table (0 when dropped).
  std::vector<std::size_t> out_stride(vars.size(), 0);
  std::size_t stride = 1;
  for (std::size_t i = vars.size(); i-- > 0;) {
    if (kept[i]) {
      out_stride[i] = stride;
      stride *= vars[i].cardinality;
    }
  }
  std::vector<double> out(stride, 0.0);
  std::vector<std::size_t> digit(vars.size(), 0);
  const auto probs = dist.probs();
  std::size_t target = 0;
  for (std::size_t flat = 0; flat < probs.size(); ++flat) {
    out[target] += probs[flat];
    // Odometer increment, maintaining the output offset incrementally.
    for (std::size_t i = vars.size(); i-- > 0;) {
      ++digit[i];
      target += out_stride[i];
      if (digit[i] < vars[i].cardinality) break;
      target -= out_stride[i] * digit[i];
      digit[i] = 0;
    }
  }
  return JointDistribution(JointDistribution::Trusted{}, std::move(out_vars), std::move(out));
}

// Shannon entropy of the marginal over `vars`; 0 log 0 = 0.
inline double entropy(const JointDistribution& dist, const VarSet& vars) {
  const JointDistribution m = marginalize(dist, vars);
  KahanSum h;
  for (double p : m.probs())
    if (p > 0.0) h.add(-p * std::log(p));
  return std::max(0.0, h.value());
}

inline double conditional_entropy(const JointDistribution& dist, const VarSet& target, const VarSet& given) {
  if (target.empty()) throw Error("conditional_entropy: empty target set");
  detail::require_disjoint(target, given, "conditional_entropy");
  if (given.empty()) return entropy(dist, target);
  const double h = entropy(dist, detail::set_union(target, given)) - entropy(dist, given);
  return h < 0.0 && h > -1e-12 ? 0.0 : h;
}

// I(a; b | given) = H(a | given) - H(a | b, given).
inline double mutual_information(const JointDistribution& dist, const VarSet& a, const VarSet& b,
                                 const VarSet& given = {}) {
  if (a.empty() || b.empty()) throw Error("mutual_information: empty variable set");
  detail::require_disjoint(a, b, "mutual_information");
  detail::require_disjoint(a, given, "mutual_information");
  detail::require_disjoint(b, given, "mutual_information");
  return conditional_entropy(dist, a, given) - conditional_entropy(dist, a, detail::set_union(b, given));
}

}  // namespace eac
