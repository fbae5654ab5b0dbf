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

// Question/answers/summary records, their JSONL form, and rendering of
// SEM samples as text.
//
// One record per line:
//   {"answers": [{"relevance": [true, false], "sentences": ["...", "..."]}],
//    "cluster_summaries": ["..."], "question": "...", "summary": "..."}
// "relevance" and "cluster_summaries" are optional. Keys are written sorted.

#pragma once

#include <algorithm>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eac/sem.hpp"
#include "eac/sem_io.hpp"
#include "eac/text.hpp"

namespace eac {

struct Answer {
  std::vector<std::string> sentences;
  std::optional<std::vector<bool>> relevance;

  friend bool operator==(const Answer&, const Answer&) = default;
};

struct Example {
  std::string question;
  std::vector<Answer> answers;
  std::optional<std::vector<std::string>> cluster_summaries;
  std::string summary;

  bool labeled() const {
    return std::all_of(answers.begin(), answers.end(), [](const Answer& a) { return a.relevance.has_value(); });
  }

  friend bool operator==(const Example&, const Example&) = default;
};

inline void validate_example(const Example& ex) {
  if (ex.answers.empty()) throw Error("example has no answers");
  for (std::size_t i = 0; i < ex.answers.size(); ++i) {
    const auto& a = ex.answers[i];
    if (a.sentences.empty()) throw Error("answer " + std::to_string(i) + " has no sentences");
    if (a.relevance && a.relevance->size() != a.sentences.size())
      throw Error("answer " + std::to_string(i) + ": relevance has " + std::to_string(a.relevance->size()) +
                  " labels for " + std::to_string(a.sentences.size()) + " sentences");
  }
}

inline nlohmann::json example_to_json(const Example& ex) {
  nlohmann::json j;
  j["question"] = ex.question;
  auto answers = nlohmann::json::array();
  for (const auto& a : ex.answers) {
    nlohmann::json aj;
    aj["sentences"] = a.sentences;
    if (a.relevance) aj["relevance"] = *a.relevance;
    answers.push_back(std::move(aj));
  }
  j["answers"] = std::move(answers);
  if (ex.cluster_summaries) j["cluster_summaries"] = *ex.cluster_summaries;
  j["summary"] = ex.summary;
  return j;
}

namespace detail {

inline std::vector<std::string> string_list(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string("'") + what + "' must be an array of strings");
  std::vector<std::string> out;
  for (const auto& e : j) {
    if (!e.is_string()) throw Error(std::string("'") + what + "' must be an array of strings");
    out.push_back(e.get<std::string>());
  }
  return out;
}

inline std::string string_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("missing field '") + key + "'");
  if (!j.at(key).is_string()) throw Error(std::string("'") + key + "' must be a string");
  return j.at(key).get<std::string>();
}

}  // namespace detail

inline Example example_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("record must be a JSON object");
  detail::reject_unknown_keys(j, {"question", "answers", "cluster_summaries", "summary"}, "record");
  Example ex;
  ex.question = detail::string_field(j, "question");
  ex.summary = detail::string_field(j, "summary");
  if (!j.contains("answers") || !j.at("answers").is_array()) throw Error("'answers' must be an array");
  for (const auto& aj : j.at("answers")) {
    if (!aj.is_object()) throw Error("each answer must be an object");
    detail::reject_unknown_keys(aj, {"sentences", "relevance"}, "answer");
    Answer a;
    if (!aj.contains("sentences")) throw Error("missing field 'sentences'");
    a.sentences = detail::string_list(aj.at("sentences"), "sentences");
    if (aj.contains("relevance")) {
      const auto& rj = aj.at("relevance");
      if (!rj.is_array()) throw Error("'relevance' must be an array of booleans");
      std::vector<bool> rel;
      for (const auto& b : rj) {
        if (!b.is_boolean()) throw Error("'relevance' must be an array of booleans");
        rel.push_back(b.get<bool>());
      }
      a.relevance = std::move(rel);
    }
    ex.answers.push_back(std::move(a));
  }
  if (j.contains("cluster_summaries")) ex.cluster_summaries = detail::string_list(j.at("cluster_summaries"), "cluster_summaries");
  validate_example(ex);
  return ex;
}

// Blank lines are skipped; any other bad line is reported as name:line.
inline std::vector<Example> parse_corpus(std::istream& in, const std::string& name = "<corpus>") {
  std::vector<Example> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(example_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(name + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(name + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<Example> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return parse_corpus(in, path);
}

inline std::string corpus_to_jsonl(const std::vector<Example>& corpus) {
  std::string out;
  for (const auto& ex : corpus) {
    validate_example(ex);
    out += example_to_json(ex).dump();
    out += '\n';
  }
  return out;
}

inline void save_corpus(const std::vector<Example>& corpus, const std::string& path) {
  const std::string text = corpus_to_jsonl(corpus);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

// Symbol -> phrase tables for questions and sentences. Sentences render as
// "<phrase>." and questions as "<phrase>?".
class Verbalizer {
 public:
  Verbalizer(std::vector<std::string> question_phrases, std::vector<std::string> sentence_phrases)
      : questions_(std::move(question_phrases)), sentences_(std::move(sentence_phrases)) {
    check_injective(questions_, "question");
    check_injective(sentences_, "sentence");
  }

  // "q<i>" and "w<k>", one token each. With words_per_symbol > 1 every
  // sentence symbol becomes that many tokens "w<k>p0 w<k>p1 ...".
  static Verbalizer standard(std::size_t questions, std::size_t sentence_symbols, std::size_t words_per_symbol = 1) {
    if (words_per_symbol == 0) throw Error("verbalizer: words_per_symbol must be >= 1");
    std::vector<std::string> q, s;
    for (std::size_t i = 0; i < questions; ++i) q.push_back("q" + std::to_string(i));
    for (std::size_t k = 0; k < sentence_symbols; ++k) {
      if (words_per_symbol == 1) {
        s.push_back("w" + std::to_string(k));
        continue;
      }
      std::string phrase;
      for (std::size_t p = 0; p < words_per_symbol; ++p)
        phrase += (p ? " w" : "w") + std::to_string(k) + "p" + std::to_string(p);
      s.push_back(phrase);
    }
    return Verbalizer(std::move(q), std::move(s));
  }

  static Verbalizer for_sem(const Sem& sem, std::size_t words_per_symbol = 1) {
    if (!sem.layout()) throw Error("verbalizer: SEM has no sentence layout");
    return standard(sem.cards().q, sem.layout()->sentence_vocab, words_per_symbol);
  }

  std::string question(std::size_t q) const {
    if (q >= questions_.size()) throw Error("verbalizer: no phrase for question symbol " + std::to_string(q));
    return questions_[q] + "?";
  }
  std::string sentence(std::size_t k) const {
    if (k >= sentences_.size()) throw Error("verbalizer: no phrase for sentence symbol " + std::to_string(k));
    return sentences_[k] + ".";
  }

 private:
  static void check_injective(const std::vector<std::string>& phrases, const char* what) {
    std::set<std::string> seen;
    for (const auto& p : phrases) {
      if (p.empty()) throw Error(std::string("verbalizer: empty ") + what + " phrase");
      if (!seen.insert(p).second) throw Error(std::string("verbalizer: duplicate ") + what + " phrase '" + p + "'");
    }
  }

  std::vector<std::string> questions_;
  std::vector<std::string> sentences_;
};

// One answer per example: the sentences of x. A sentence is relevant when
// its symbol occurs in the content of r; the summary renders y.
inline Example verbalize_sample(const Sem& sem, const Verbalizer& v, const SemSample& s) {
  if (!sem.layout()) throw Error("synthesize_corpus: SEM has no sentence layout");
  const auto& layout = *sem.layout();
  Example ex;
  ex.question = v.question(s.q);
  Answer a;
  std::vector<bool> rel;
  const auto& relevant = layout.r_sentences[s.r];
  for (std::size_t sym : layout.x_sentences[s.x]) {
    a.sentences.push_back(v.sentence(sym));
    rel.push_back(std::find(relevant.begin(), relevant.end(), sym) != relevant.end());
  }
  a.relevance = std::move(rel);
  ex.answers.push_back(std::move(a));
  std::vector<std::string> summary;
  for (std::size_t sym : layout.y_sentences[s.y]) summary.push_back(v.sentence(sym));
  ex.summary = join(summary);
  return ex;
}

inline std::vector<Example> synthesize_corpus(const Sem& sem, const Verbalizer& v, std::size_t count,
                                              std::uint64_t seed, unsigned threads = 1) {
  if (count == 0) throw Error("synthesize_corpus: count must be >= 1");
  if (!sem.layout()) throw Error("synthesize_corpus: SEM has no sentence layout");
  std::vector<Example> out(count);
  parallel_for(count, threads, [&](std::size_t i) { out[i] = verbalize_sample(sem, v, sample_sem_one(sem, seed, i)); });
  return out;
}

}  // namespace eac
