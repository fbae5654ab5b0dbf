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

// SEM spec files. Two forms are accepted:
//
//   {"kind": "uniform-pick", "n_sentences": 8, "vocab": 8, "distinct": true}
//
// or the explicit table form written by save_sem:
//
//   {"format": "eac-sem/1",
//    "cardinalities": {"Q": 1, "X": 6, "X_R": 3, "Y": 3},
//    "q_prior":   [p(q)],
//    "x_given_q": [[p(x|q)] for each q],
//    "extractor": [[p(x_r|q,x)] for each (q, x), q-major],
//    "generator": [[p(y|q,x_r)] for each (q, x_r), q-major],
//    "layout": {"sentence_vocab": 3, "x_sentences": [[...]],
//               "r_sentences": [[...]], "y_sentences": [[...]]}}   // optional
//
// Doubles are written in shortest round-trip form, so save/load is lossless.

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "eac/sem.hpp"

namespace eac {

inline constexpr const char* kSemFormat = "eac-sem/1";

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || it.key() == k;
    if (!ok) throw Error(where + ": unknown field '" + it.key() + "'");
  }
}

inline std::vector<double> flatten_rows(const nlohmann::json& rows, std::size_t expected_rows, std::size_t width,
                                        const char* what) {
  if (!rows.is_array() || rows.size() != expected_rows)
    throw Error(std::string("SEM file: '") + what + "' must be an array of " + std::to_string(expected_rows) + " rows");
  std::vector<double> out;
  out.reserve(expected_rows * width);
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != width)
      throw Error(std::string("SEM file: every row of '") + what + "' must have " + std::to_string(width) +
                  " entries");
    for (const auto& v : row) out.push_back(v.get<double>());
  }
  return out;
}

inline nlohmann::json split_rows(const std::vector<double>& flat, std::size_t width) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < flat.size(); i += width)
    rows.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(i),
                                       flat.begin() + static_cast<std::ptrdiff_t>(i + width)));
  return rows;
}

}  // namespace detail

inline nlohmann::json sem_to_json(const Sem& sem) {
  const auto& c = sem.cards();
  nlohmann::json j;
  j["format"] = kSemFormat;
  j["cardinalities"] = {{"Q", c.q}, {"X", c.x}, {"X_R", c.r}, {"Y", c.y}};
  j["q_prior"] = sem.q_prior();
  j["x_given_q"] = detail::split_rows(sem.x_given_q(), c.x);
  j["extractor"] = detail::split_rows(sem.extractor(), c.r);
  j["generator"] = detail::split_rows(sem.generator(), c.y);
  if (const auto& l = sem.layout()) {
    j["layout"] = {{"sentence_vocab", l->sentence_vocab},
                   {"x_sentences", l->x_sentences},
                   {"r_sentences", l->r_sentences},
                   {"y_sentences", l->y_sentences}};
  }
  return j;
}

inline Sem sem_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("SEM file: top level must be an object");
  try {
    if (j.contains("kind")) {
      detail::reject_unknown_keys(j, {"kind", "n_sentences", "vocab", "distinct"}, "SEM file");
      ExampleOptions opt;
      opt.n_sentences = j.value("n_sentences", opt.n_sentences);
      opt.vocab = j.value("vocab", opt.vocab);
      opt.distinct = j.value("distinct", opt.distinct);
      return example_sem(example_kind_from_string(j.at("kind").get<std::string>()), opt);
    }
    detail::reject_unknown_keys(j, {"format", "cardinalities", "q_prior", "x_given_q", "extractor", "generator", "layout"},
                                "SEM file");
    if (j.value("format", std::string(kSemFormat)) != kSemFormat)
      throw Error("SEM file: unsupported format '" + j.at("format").get<std::string>() + "'");
    const auto& cj = j.at("cardinalities");
    detail::reject_unknown_keys(cj, {"Q", "X", "X_R", "Y"}, "SEM file cardinalities");
    SemCards c{cj.at("Q").get<std::size_t>(), cj.at("X").get<std::size_t>(), cj.at("X_R").get<std::size_t>(),
               cj.at("Y").get<std::size_t>()};
    auto q = detail::flatten_rows(nlohmann::json::array({j.at("q_prior")}), 1, c.q, "q_prior");
    auto x = detail::flatten_rows(j.at("x_given_q"), c.q, c.x, "x_given_q");
    auto r = detail::flatten_rows(j.at("extractor"), c.q * c.x, c.r, "extractor");
    auto y = detail::flatten_rows(j.at("generator"), c.q * c.r, c.y, "generator");
    std::optional<SemLayout> layout;
    if (j.contains("layout")) {
      const auto& lj = j.at("layout");
      detail::reject_unknown_keys(lj, {"sentence_vocab", "x_sentences", "r_sentences", "y_sentences"}, "SEM layout");
      SemLayout l;
      l.sentence_vocab = lj.at("sentence_vocab").get<std::size_t>();
      l.x_sentences = lj.at("x_sentences").get<std::vector<std::vector<std::size_t>>>();
      l.r_sentences = lj.at("r_sentences").get<std::vector<std::vector<std::size_t>>>();
      if (lj.contains("y_sentences")) l.y_sentences = lj.at("y_sentences").get<std::vector<std::vector<std::size_t>>>();
      layout = std::move(l);
    }
    return Sem(c, std::move(q), std::move(x), std::move(r), std::move(y), std::move(layout));
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("SEM file: ") + e.what());
  }
}

inline Sem load_sem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open SEM file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("SEM file '" + path + "': " + e.what());
  }
  return sem_from_json(j);
}

inline void save_sem(const Sem& sem, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write SEM file '" + path + "'");
  out << sem_to_json(sem).dump(1) << '\n';
}

}  // namespace eac
