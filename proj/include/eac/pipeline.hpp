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

// Extract-and-generate summarization over any SequenceModel.
//
// Both tasks share one input layout, a task tag then the question, a
// separator and the content:
//   summarize: <question> <sep> <answer sentences>    -> relevant sentences
//   generate:  <question> <sep> <basis sentences>     -> summary

#pragma once

#include <string>
#include <vector>

#include "eac/corpus.hpp"
#include "eac/metrics.hpp"
#include "eac/ngram.hpp"
#include "eac/seq_model.hpp"
#include "eac/text.hpp"

namespace eac {

inline const std::string kSummarizeTag = "summarize:";
inline const std::string kGenerateTag = "generate:";
inline const std::string kSeparator = "<sep>";

inline Tokens text_tokens(const std::string& text) { return tokenize(text).tokens; }

inline Tokens sentence_tokens(const std::vector<std::string>& sentences) {
  Tokens out;
  for (const auto& s : sentences) {
    auto t = text_tokens(s);
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

inline Tokens tagged_input(const std::string& tag, const std::string& question, const Tokens& content) {
  Tokens out{tag};
  auto q = text_tokens(question);
  out.insert(out.end(), q.begin(), q.end());
  out.push_back(kSeparator);
  out.insert(out.end(), content.begin(), content.end());
  return out;
}

inline Tokens extractor_input(const std::string& question, const Answer& answer) {
  return tagged_input(kSummarizeTag, question, sentence_tokens(answer.sentences));
}

inline Tokens generator_input(const std::string& question, const Tokens& basis) {
  return tagged_input(kGenerateTag, question, basis);
}

inline void require_labels(const Example& ex, const char* who) {
  if (!ex.labeled()) throw Error(std::string(who) + ": example lacks relevance labels");
}

// Relevant sentences of one answer, in document order.
inline std::vector<std::string> relevant_sentences(const Answer& a) {
  if (!a.relevance) throw Error("answer lacks relevance labels");
  std::vector<std::string> out;
  for (std::size_t j = 0; j < a.sentences.size(); ++j)
    if ((*a.relevance)[j]) out.push_back(a.sentences[j]);
  return out;
}

inline Tokens gold_extraction_target(const Answer& a) { return sentence_tokens(relevant_sentences(a)); }

// Every answer's relevant sentences, answers in order.
inline Tokens gold_basis(const Example& ex) {
  require_labels(ex, "gold_basis");
  Tokens out;
  for (const auto& a : ex.answers) {
    auto t = gold_extraction_target(a);
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

inline Tokens full_input_basis(const Example& ex) {
  Tokens out;
  for (const auto& a : ex.answers) {
    auto t = sentence_tokens(a.sentences);
    out.insert(out.end(), t.begin(), t.end());
  }
  return out;
}

enum class SentenceMatch {
  RawPrecision,      // overlap / |raw|: share of the extraction found in the sentence
  SentencePrecision  // overlap / |sentence|: share of the sentence found in the extraction
};

// Indices of the answer sentences the free-form extraction maps back to,
// using ROUGE-1 (stemmed, clipped) overlap against each sentence.
inline std::vector<std::size_t> extractive_postprocess(const Tokens& raw, const Answer& answer, double threshold = 0.8,
                                                       SentenceMatch match = SentenceMatch::RawPrecision) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("extractive_postprocess: threshold must be in (0, 1]");
  const TokenSeq extraction = TokenSeq::from_tokens(raw);
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < answer.sentences.size(); ++j) {
    const TokenSeq sentence = tokenize(answer.sentences[j]);
    const double score = match == SentenceMatch::RawPrecision ? rouge_n(extraction, sentence, 1).precision
                                                              : rouge_n(sentence, extraction, 1).precision;
    if (score >= threshold) out.push_back(j);
  }
  return out;
}

inline std::vector<double> relevant_fractions(const Example& ex) {
  require_labels(ex, "relevant_fractions");
  std::vector<double> w;
  for (const auto& a : ex.answers) {
    const auto& r = *a.relevance;
    w.push_back(static_cast<double>(std::count(r.begin(), r.end(), true)) / static_cast<double>(r.size()));
  }
  return w;
}

// Answer index drawn in proportion to its fraction of relevant sentences;
// uniform when no answer has any.
inline std::size_t sample_answer(const Example& ex, std::uint64_t seed) {
  auto w = relevant_fractions(ex);
  if (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; })) std::fill(w.begin(), w.end(), 1.0);
  Rng rng(seed);
  return rng.categorical(w);
}

inline TrainingPair extraction_pair(const Example& ex, std::size_t answer) {
  require_labels(ex, "extraction_pair");
  if (answer >= ex.answers.size()) throw Error("answer index out of range");
  return {extractor_input(ex.question, ex.answers[answer]), gold_extraction_target(ex.answers[answer])};
}

inline TrainingPair oracle_pair(const Example& ex) {
  return {generator_input(ex.question, gold_basis(ex)), text_tokens(ex.summary)};
}

inline TrainingPair direct_pair(const Example& ex) {
  return {generator_input(ex.question, full_input_basis(ex)), text_tokens(ex.summary)};
}

// Cross-entropy of the gold summary given the gold basis plus that of the
// sampled answer's relevant sentences given the answer.
inline double multitask_loss(const SequenceModel& model, const Example& ex, std::size_t sampled_answer) {
  const auto gen = oracle_pair(ex);
  const auto ext = extraction_pair(ex, sampled_answer);
  return -log_likelihood(model, gen.first, gen.second) - log_likelihood(model, ext.first, ext.second);
}

// Training pairs for the single multi-task model: one extraction pair for a
// sampled answer and one generation pair per example.
inline std::vector<TrainingPair> multitask_pairs(const std::vector<Example>& corpus, std::uint64_t seed) {
  std::vector<TrainingPair> out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    out.push_back(extraction_pair(corpus[i], sample_answer(corpus[i], derive_seed(seed, i))));
    out.push_back(oracle_pair(corpus[i]));
  }
  return out;
}

struct InferenceOptions {
  double threshold = 0.8;
  std::size_t max_len = 64;
  SentenceMatch match = SentenceMatch::RawPrecision;
};

struct EaResult {
  std::vector<Tokens> raw_extractions;
  std::vector<std::vector<std::size_t>> postprocessed;
  Tokens basis;  // selected sentences, the generator's content
  Tokens final_summary;
};

// Extract per answer with `extractor`, map back to input sentences, then
// generate from the selection with `generator`. With nothing selected the
// generator sees the question alone.
inline EaResult run_inference(const SequenceModel& extractor, const SequenceModel& generator, const Example& ex,
                              const InferenceOptions& opt = {}) {
  EaResult res;
  for (const auto& a : ex.answers) {
    res.raw_extractions.push_back(generate_greedy(extractor, extractor_input(ex.question, a), opt.max_len));
    res.postprocessed.push_back(extractive_postprocess(res.raw_extractions.back(), a, opt.threshold, opt.match));
    for (std::size_t j : res.postprocessed.back()) {
      auto t = text_tokens(a.sentences[j]);
      res.basis.insert(res.basis.end(), t.begin(), t.end());
    }
  }
  res.final_summary = generate_greedy(generator, generator_input(ex.question, res.basis), opt.max_len);
  return res;
}

inline EaResult run_inference(const SequenceModel& model, const Example& ex, const InferenceOptions& opt = {}) {
  return run_inference(model, model, ex, opt);
}

enum class OverlapScore { Precision, Recall, F1 };

inline OverlapScore overlap_score_from_string(const std::string& s) {
  if (s == "precision") return OverlapScore::Precision;
  if (s == "recall") return OverlapScore::Recall;
  if (s == "f1") return OverlapScore::F1;
  throw Error("unknown overlap score '" + s + "' (expected precision, recall or f1)");
}

// A sentence is relevant when its ROUGE-1 against the gold summary reaches
// the threshold. Precision is the share of the sentence's tokens that also
// occur in the summary.
inline std::vector<std::vector<bool>> distant_label(const Example& ex, double threshold,
                                                    OverlapScore score = OverlapScore::Precision) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("distant_label: threshold must be in (0, 1]");
  const TokenSeq summary = tokenize(ex.summary);
  std::vector<std::vector<bool>> out;
  for (const auto& a : ex.answers) {
    std::vector<bool> labels;
    for (const auto& s : a.sentences) {
      const Score r = rouge_n(tokenize(s), summary, 1);
      const double v = score == OverlapScore::Precision ? r.precision : score == OverlapScore::Recall ? r.recall : r.f1;
      labels.push_back(v >= threshold);
    }
    out.push_back(std::move(labels));
  }
  return out;
}

inline std::vector<std::vector<bool>> gold_labels(const Example& ex) {
  require_labels(ex, "gold_labels");
  std::vector<std::vector<bool>> out;
  for (const auto& a : ex.answers) out.push_back(*a.relevance);
  return out;
}

struct Confusion {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

  double precision() const { return tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0; }
  double recall() const { return tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0; }
  Confusion& operator+=(const Confusion& o) {
    tp += o.tp, fp += o.fp, fn += o.fn, tn += o.tn;
    return *this;
  }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

inline Confusion overlap_report(const std::vector<std::vector<bool>>& gold,
                                const std::vector<std::vector<bool>>& predicted) {
  if (gold.size() != predicted.size()) throw Error("overlap_report: answer count mismatch");
  Confusion c;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != predicted[i].size()) throw Error("overlap_report: sentence count mismatch");
    for (std::size_t j = 0; j < gold[i].size(); ++j) {
      const bool g = gold[i][j], p = predicted[i][j];
      (g ? (p ? c.tp : c.fn) : (p ? c.fp : c.tn)) += 1;
    }
  }
  return c;
}

// What a system conditions its summary on, and therefore what the verifier
// must see when scoring it.
enum class SystemKind { Direct, ExtractAndGenerate, Oracle };
enum class BasisKind { FullInput, PredictedRelevant, GoldRelevant };

inline BasisKind required_basis(SystemKind s) {
  switch (s) {
    case SystemKind::Direct: return BasisKind::FullInput;
    case SystemKind::ExtractAndGenerate: return BasisKind::PredictedRelevant;
    case SystemKind::Oracle: return BasisKind::GoldRelevant;
  }
  throw Error("unknown system kind");
}

struct Basis {
  BasisKind kind;
  Tokens tokens;

  static Basis full_input(const Example& ex) { return {BasisKind::FullInput, full_input_basis(ex)}; }
  static Basis predicted(const EaResult& r) { return {BasisKind::PredictedRelevant, r.basis}; }
  static Basis gold(const Example& ex) { return {BasisKind::GoldRelevant, gold_basis(ex)}; }
};

// Log-probability of the summary under the verifier, given the question and
// the basis sentences in generator layout.
inline double faithfulness_score(const SequenceModel& verifier, const std::string& question, const Tokens& basis,
                                 const Tokens& summary) {
  return log_likelihood(verifier, generator_input(question, basis), summary);
}

struct Faithfulness {
  double total = 0.0;      // summed log-probability
  double per_token = 0.0;  // total / (summary length + 1)
};

// Rejects a basis of the wrong provenance for the system being scored.
inline Faithfulness evaluate_faithfulness(const SequenceModel& verifier, SystemKind system, const std::string& question,
                                          const Basis& basis, const Tokens& summary) {
  if (basis.kind != required_basis(system)) throw Error("faithfulness: basis provenance does not match the system");
  Faithfulness f;
  f.total = faithfulness_score(verifier, question, basis.tokens, summary);
  f.per_token = f.total / static_cast<double>(summary.size() + 1);
  return f;
}

}  // namespace eac
