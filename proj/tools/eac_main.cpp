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

// eac: command-line driver for the eacausal library.
//
// Exit codes: 0 success, 1 validation or assertion failure, 2 usage error.

#include <cfloat>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "eac/confound.hpp"
#include "eac/corpus.hpp"
#include "eac/metrics.hpp"
#include "eac/ngram.hpp"
#include "eac/pipeline.hpp"
#include "eac/sem.hpp"
#include "eac/sem_io.hpp"

namespace {

using nlohmann::json;
using namespace eac;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Global {
  bool json_out = false;
  int threads = 0;  // 0: EACL_THREADS or 1
  bool bits = false;
};

unsigned resolve_threads(const Global& g) {
  if (g.threads > 0) return static_cast<unsigned>(g.threads);
  if (const char* env = std::getenv("EACL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw UsageError(std::string("EACL_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<unsigned>(v);
  }
  return 1;
}

void log_config(const std::string& cmd, json cfg, unsigned threads) {
  cfg["threads"] = threads;
  std::cerr << "eac " << cmd << ": config " << cfg.dump() << '\n';
}

void emit_json(const json& j) { std::cout << j.dump(2) << '\n'; }

std::string fmt(double v, int prec = 6) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

// Constant groups with different means report t = +-DBL_MAX.
std::string tstat(double t) {
  if (std::abs(t) == DBL_MAX) return t > 0 ? "+inf" : "-inf";
  return fmt(t, 3);
}

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

// Plain column table; the first column is left-aligned.
void print_table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) std::cout << "  ";
      const std::string pad(width[c] - r[c].size(), ' ');
      std::cout << (c == 0 ? r[c] + pad : pad + r[c]);
    }
    std::cout << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out.push_back(line);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SEM selection shared by ce-exact and synth-corpus.

struct SemSource {
  std::string sem_path;
  std::string example = "uniform-pick";
  std::size_t n = 4;
  std::size_t vocab = 0;
  bool collisions = false;

  void add_options(CLI::App* app) {
    app->add_option("--sem", sem_path, "SEM JSON file (overrides --example)");
    app->add_option("--example", example, "Named example: all-relevant, first-only, uniform-pick")->capture_default_str();
    app->add_option("--n", n, "Sentences per document")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--vocab", vocab, "Sentence vocabulary size (0: same as --n)")->capture_default_str();
    app->add_flag("--collisions", collisions, "Draw sentences with replacement");
  }
  json config() const {
    if (!sem_path.empty()) return {{"sem", sem_path}};
    return {{"example", example}, {"n", n}, {"vocab", vocab}, {"collisions", collisions}};
  }
  Sem build() const {
    if (!sem_path.empty()) return load_sem(sem_path);
    return example_sem(example_kind_from_string(example), {n, vocab, !collisions});
  }
};

// ---------------------------------------------------------------------------
// verify-theorems

struct VerifyArgs {
  std::size_t n_sems = 200;
  std::uint64_t seed = 1;
  std::size_t max_card = 4;
  double concentration = 1.0;
  std::vector<std::string> sem_files;
};

std::vector<VarSet> flow_source_sets(const SemCards& c) {
  // Source sets containing Q are unconfounded on the chain; with a single
  // question every set is.
  std::vector<VarSet> out{{"Q"}, {"Q", "X"}, {"Q", "X_R"}, {"Q", "X", "X_R"}};
  if (c.q == 1)
    for (VarSet s : {VarSet{"X"}, VarSet{"X_R"}, VarSet{"X", "X_R"}}) out.push_back(s);
  return out;
}

int cmd_verify(const Global& g, const VerifyArgs& a) {
  const unsigned threads = resolve_threads(g);
  if (a.max_card == 0) throw UsageError("--max-card must be >= 1");
  log_config("verify-theorems",
             {{"n_sems", a.n_sems}, {"seed", a.seed}, {"max_card", a.max_card}, {"concentration", a.concentration},
              {"sem_files", a.sem_files}},
             threads);
  if (a.n_sems == 0 && a.sem_files.empty())
    std::cerr << "warning: no SEMs to check; the theorem check passes vacuously\n";

  struct Row {
    std::string name;
    SemCards cards;
    double t1 = 0, t2 = 0, flow_mi = 0, ce = 0;
    bool skipped = false;
    std::string note;
  };
  std::vector<Row> rows(a.n_sems);
  auto check = [](const Sem& sem, Row& r) {
    const JointDistribution joint = build_joint(sem);
    const CausalReport rep = causal_effect_irrelevant(sem, joint);
    r.cards = sem.cards();
    r.ce = rep.ce_flow;
    r.t1 = std::abs(rep.ce_flow - rep.ce_entropy);
    r.t2 = std::abs(rep.l_f - rep.l_g - rep.ce_flow);
    for (const auto& s : flow_source_sets(sem.cards()))
      r.flow_mi = std::max(r.flow_mi, std::abs(information_flow(sem, joint, s) - mutual_information(joint, s, {"Y"})));
  };
  parallel_for(a.n_sems, threads, [&](std::size_t i) {
    Row& r = rows[i];
    r.name = "random#" + std::to_string(i);
    Rng rng(derive_seed(a.seed, i));
    SemCards c;
    c.q = 1 + rng.below(a.max_card);
    c.x = 1 + rng.below(a.max_card);
    c.r = 1 + rng.below(a.max_card);
    c.y = 1 + rng.below(a.max_card);
    r.cards = c;
    std::optional<Sem> sem;
    try {
      sem = random_sem(c, a.concentration, derive_seed(a.seed ^ 0x5eedULL, i));
    } catch (const Error& e) {
      // Table-size limit. Identity failures below are not caught.
      r.skipped = true;
      r.note = e.what();
      return;
    }
    check(*sem, r);
  });
  // Explicit files must construct; failures surface as errors.
  for (const auto& path : a.sem_files) {
    Row r;
    r.name = path;
    check(load_sem(path), r);
    rows.push_back(r);
  }

  double max_t1 = 0, max_t2 = 0, max_fm = 0;
  std::size_t checked = 0, skipped = 0;
  for (const auto& r : rows) {
    if (r.skipped) {
      ++skipped;
      std::cerr << "warning: skipped " << r.name << ": " << r.note << '\n';
      continue;
    }
    ++checked;
    max_t1 = std::max(max_t1, r.t1);
    max_t2 = std::max(max_t2, r.t2);
    max_fm = std::max(max_fm, r.flow_mi);
  }
  const bool ok = max_t1 <= kIdentityTolerance && max_t2 <= kIdentityTolerance && max_fm <= kIdentityTolerance;

  if (g.json_out) {
    json per = json::array();
    for (const auto& r : rows) {
      json e = {{"name", r.name},
                {"cardinalities", {{"Q", r.cards.q}, {"X", r.cards.x}, {"X_R", r.cards.r}, {"Y", r.cards.y}}}};
      if (r.skipped) {
        e["skipped"] = r.note;
      } else {
        e["ce"] = r.ce;
        e["residual_entropy_identity"] = r.t1;
        e["residual_loss_identity"] = r.t2;
        e["residual_flow_mi"] = r.flow_mi;
      }
      per.push_back(e);
    }
    emit_json({{"checked", checked},
               {"skipped", skipped},
               {"tolerance", kIdentityTolerance},
               {"max_residual_entropy_identity", max_t1},
               {"max_residual_loss_identity", max_t2},
               {"max_residual_flow_mi", max_fm},
               {"pass", ok},
               {"sems", per}});
  } else {
    std::cout << "checked " << checked << " SEMs, skipped " << skipped << "\n";
    print_table({"identity", "max residual", "tolerance"},
                {{"ce_flow = H(X_R|X,Q) - H(X_R|X,Q,Y)", sci(max_t1), "1e-10"},
                 {"l(f) = l(g) + ce", sci(max_t2), "1e-10"},
                 {"flow = mutual information", sci(max_fm), "1e-10"}});
    std::cout << (ok ? "PASS" : "FAIL") << '\n';
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// ce-exact

int cmd_ce_exact(const Global& g, const SemSource& src) {
  const unsigned threads = resolve_threads(g);
  log_config("ce-exact", src.config(), threads);
  const Sem sem = src.build();
  const CausalReport r = causal_effect_irrelevant(sem);
  const double s = g.bits ? 1.0 / std::log(2.0) : 1.0;
  const auto& c = sem.cards();
  if (g.json_out) {
    emit_json({{"unit", g.bits ? "bits" : "nats"},
               {"cardinalities", {{"Q", c.q}, {"X", c.x}, {"X_R", c.r}, {"Y", c.y}}},
               {"flow_full", r.flow_full * s},
               {"flow_relevant", r.flow_relevant * s},
               {"ce", r.ce_flow * s},
               {"ce_entropy", r.ce_entropy * s},
               {"h_r_given_x_q", r.h_r_given_x * s},
               {"h_r_given_x_q_y", r.h_r_given_xy * s},
               {"l_f", r.l_f * s},
               {"l_g", r.l_g * s}});
    return 0;
  }
  const std::string u = g.bits ? " (bits)" : " (nats)";
  print_table({"quantity", "value" + u},
              {{"I({Q,X} -> Y)", fmt(r.flow_full * s)},
               {"I({Q,X_R} -> Y)", fmt(r.flow_relevant * s)},
               {"CE(X_R^c)", fmt(r.ce_flow * s)},
               {"H(X_R|X,Q) - H(X_R|X,Q,Y)", fmt(r.ce_entropy * s)},
               {"l(f) = H(Y|Q,X)", fmt(r.l_f * s)},
               {"l(g) = H(Y|Q,X_R)", fmt(r.l_g * s)}});
  return 0;
}

// ---------------------------------------------------------------------------
// ce-estimate

struct ClassifierArgs {
  ClassifierOptions opt;
  void add_options(CLI::App* app) {
    app->add_option("--epochs", opt.epochs, "Gradient descent epochs")->capture_default_str();
    app->add_option("--lr", opt.lr, "Learning rate")->capture_default_str();
    app->add_option("--l2", opt.l2, "L2 penalty")->capture_default_str();
    app->add_option("--hash-dim", opt.hash_dim, "Hashed feature dimension")->capture_default_str();
  }
  json config() const { return {{"epochs", opt.epochs}, {"lr", opt.lr}, {"l2", opt.l2}, {"hash_dim", opt.hash_dim}}; }
};

struct CeEstimateArgs {
  std::string corpus;
  std::uint64_t seed = 1;
  std::string mode = "set";
  double held_out = 0.2;
  ClassifierArgs cls;
};

json estimate_json(const CeEstimate& e, double s) {
  return {{"mode", to_string(e.mode)}, {"h1", e.h1 * s}, {"h2", e.h2 * s}, {"ce", e.ce * s},
          {"se", e.se * s},            {"units", e.units}};
}

int cmd_ce_estimate(const Global& g, const CeEstimateArgs& a) {
  const unsigned threads = resolve_threads(g);
  json cfg = {{"corpus", a.corpus}, {"seed", a.seed}, {"mode", a.mode}, {"held_out", a.held_out}};
  cfg["classifier"] = a.cls.config();
  log_config("ce-estimate", cfg, threads);
  const CeMode mode = ce_mode_from_string(a.mode);
  const auto corpus = load_corpus(a.corpus);
  const auto r = estimate_ce_from_corpus(corpus, a.seed, a.cls.opt, mode, a.held_out, threads);
  const double s = g.bits ? 1.0 / std::log(2.0) : 1.0;
  if (g.json_out) {
    json j = estimate_json(r.estimate, s);
    j["unit"] = g.bits ? "bits" : "nats";
    j["train_examples"] = r.train_examples;
    j["test_examples"] = r.test_examples;
    emit_json(j);
    return 0;
  }
  const auto& e = r.estimate;
  std::cout << "train " << r.train_examples << " examples, test " << r.test_examples << " examples, " << e.units
            << (mode == CeMode::SetLevel ? " answers" : " sentences") << '\n';
  const std::string u = g.bits ? " (bits)" : " (nats)";
  print_table({"quantity", "value" + u},
              {{"H1 (question, answer)", fmt(e.h1 * s)},
               {"H2 (with summary)", fmt(e.h2 * s)},
               {"CE = H1 - H2", fmt(e.ce * s)},
               {"standard error", fmt(e.se * s)}});
  return 0;
}

// ---------------------------------------------------------------------------
// synth-corpus

struct SynthArgs {
  SemSource src;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  std::size_t words = 1;
  std::string output;
};

int cmd_synth(const Global& g, const SynthArgs& a) {
  const unsigned threads = resolve_threads(g);
  json cfg = a.src.config();
  cfg.update({{"count", a.count}, {"seed", a.seed}, {"words_per_symbol", a.words}, {"output", a.output}});
  log_config("synth-corpus", cfg, threads);
  const Sem sem = a.src.build();
  const auto corpus = synthesize_corpus(sem, Verbalizer::for_sem(sem, a.words), a.count, a.seed, threads);
  save_corpus(corpus, a.output);
  std::size_t relevant = 0, sentences = 0;
  for (const auto& ex : corpus)
    for (const auto& ans : ex.answers) {
      sentences += ans.sentences.size();
      relevant += static_cast<std::size_t>(std::count(ans.relevance->begin(), ans.relevance->end(), true));
    }
  if (g.json_out) {
    emit_json({{"examples", corpus.size()}, {"sentences", sentences}, {"relevant_sentences", relevant}});
  } else {
    std::cout << "wrote " << corpus.size() << " examples (" << sentences << " sentences, " << relevant
              << " relevant) to " << a.output << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Summary metrics, shared by metrics and train-eval.

struct SummaryMetrics {
  double rouge1 = 0, rouge2 = 0, rougeL = 0, meteor = 0;
  double perspective = NAN;  // only with cluster summaries
  double length = 0;
};

SummaryMetrics score_summary(const Tokens& prediction, const Example& ex) {
  const TokenSeq cand = TokenSeq::from_tokens(prediction);
  const TokenSeq ref = tokenize(ex.summary);
  SummaryMetrics m;
  m.rouge1 = rouge_n(cand, ref, 1).f1;
  m.rouge2 = rouge_n(cand, ref, 2).f1;
  m.rougeL = rouge_l(cand, ref).f1;
  m.meteor = meteor_lite(cand, ref);
  if (ex.cluster_summaries && !ex.cluster_summaries->empty()) {
    std::vector<TokenSeq> clusters;
    for (const auto& c : *ex.cluster_summaries) clusters.push_back(tokenize(c));
    m.perspective = eac::perspective(cand, clusters);
  }
  m.length = static_cast<double>(cand.size());
  return m;
}

SummaryMetrics mean_metrics(const std::vector<SummaryMetrics>& all) {
  SummaryMetrics out;
  KahanSum r1, r2, rl, me, pe, len;
  std::size_t with_p = 0;
  for (const auto& m : all) {
    r1.add(m.rouge1), r2.add(m.rouge2), rl.add(m.rougeL), me.add(m.meteor), len.add(m.length);
    if (!std::isnan(m.perspective)) pe.add(m.perspective), ++with_p;
  }
  const double n = static_cast<double>(all.size());
  out.rouge1 = r1.value() / n, out.rouge2 = r2.value() / n, out.rougeL = rl.value() / n;
  out.meteor = me.value() / n, out.length = len.value() / n;
  out.perspective = with_p ? pe.value() / static_cast<double>(with_p) : NAN;
  return out;
}

json metrics_json(const SummaryMetrics& m) {
  return {{"rouge1", m.rouge1}, {"rouge2", m.rouge2},   {"rougeL", m.rougeL},
          {"meteor", m.meteor}, {"perspective", nullable(m.perspective)}, {"length", m.length}};
}

std::vector<std::string> metrics_row(const std::string& name, const SummaryMetrics& m) {
  return {name, fmt(m.rouge1, 4), fmt(m.rouge2, 4), fmt(m.rougeL, 4), fmt(m.meteor, 4), fmt(m.perspective, 4),
          fmt(m.length, 2)};
}

const std::vector<std::string> kMetricsHeader = {"", "ROUGE-1", "ROUGE-2", "ROUGE-L", "METEOR", "Perspective", "length"};

struct MetricsArgs {
  std::string predictions, corpus;
  bool per_example = false;
};

int cmd_metrics(const Global& g, const MetricsArgs& a) {
  const unsigned threads = resolve_threads(g);
  log_config("metrics", {{"predictions", a.predictions}, {"corpus", a.corpus}, {"per_example", a.per_example}},
             threads);
  const auto corpus = load_corpus(a.corpus);
  const auto preds = read_lines(a.predictions);
  if (preds.size() != corpus.size())
    throw Error("metrics: " + std::to_string(preds.size()) + " predictions for " + std::to_string(corpus.size()) +
                " examples");
  if (corpus.empty()) throw Error("metrics: empty corpus");
  std::vector<SummaryMetrics> per(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) { per[i] = score_summary(text_tokens(preds[i]), corpus[i]); });
  const auto mean = mean_metrics(per);
  if (g.json_out) {
    json j = {{"examples", corpus.size()}, {"mean", metrics_json(mean)}};
    if (a.per_example) {
      j["per_example"] = json::array();
      for (const auto& m : per) j["per_example"].push_back(metrics_json(m));
    }
    emit_json(j);
    return 0;
  }
  std::vector<std::vector<std::string>> rows;
  if (a.per_example)
    for (std::size_t i = 0; i < per.size(); ++i) rows.push_back(metrics_row(std::to_string(i), per[i]));
  rows.push_back(metrics_row("mean", mean));
  print_table(kMetricsHeader, rows);
  return 0;
}

// ---------------------------------------------------------------------------
// Model fitting with held-out copy-weight selection.

struct ModelArgs {
  int order = 3;
  double alpha = 0.01;
  std::string copy_weight = "tune";
  void add_options(CLI::App* app) {
    app->add_option("--order", order, "N-gram order")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--alpha", alpha, "Additive smoothing")->capture_default_str();
    app->add_option("--copy-weight", copy_weight, "Copy mixture weight in [0, 1], or 'tune'")->capture_default_str();
  }
  json config() const { return {{"order", order}, {"alpha", alpha}, {"copy_weight", copy_weight}}; }
  std::optional<double> fixed_weight() const {
    if (copy_weight == "tune") return std::nullopt;
    try {
      std::size_t used = 0;
      const double v = std::stod(copy_weight, &used);
      if (used == copy_weight.size() && v >= 0.0 && v <= 1.0) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("--copy-weight must be a number in [0, 1] or 'tune'");
  }
};

NgramSeq2Seq fit_model(const std::vector<TrainingPair>& pairs, const ModelArgs& args, std::uint64_t seed,
                       unsigned threads) {
  NgramOptions opt{args.order, args.alpha, 0.5};
  if (auto w = args.fixed_weight()) {
    opt.copy_weight = *w;
    return train_ngram(pairs, opt);
  }
  return train_ngram_tuned(pairs, opt, seed, threads);
}

// ---------------------------------------------------------------------------
// train-eval

struct TrainEvalArgs {
  std::string corpus;
  std::string mode = "pipeline";
  std::uint64_t seed = 1;
  double held_out = 0.2;
  ModelArgs model;
  double threshold = 0.8;
  std::size_t max_len = 64;
  std::string match = "raw-precision";
  bool analyze_ce = false;
  std::size_t k = 0;
  std::string ce_mode = "set";
  ClassifierArgs cls;
  std::string predictions_out, basis_out, verifier_out, test_out;
};

SentenceMatch match_from_string(const std::string& s) {
  if (s == "raw-precision") return SentenceMatch::RawPrecision;
  if (s == "sentence-coverage") return SentenceMatch::SentencePrecision;
  throw UsageError("--postprocess must be raw-precision or sentence-coverage");
}

struct SystemOutput {
  Tokens summary;
  Tokens basis;  // what the summary was generated from
  double log_likelihood = 0.0;  // of the gold summary given the basis the system uses
  Faithfulness faith;
  SummaryMetrics metrics;
  std::vector<std::vector<bool>> selected;  // extract-and-generate only
};

std::vector<std::vector<bool>> selection_masks(const Example& ex, const EaResult& r) {
  std::vector<std::vector<bool>> out;
  for (std::size_t a = 0; a < ex.answers.size(); ++a) {
    std::vector<bool> m(ex.answers[a].sentences.size(), false);
    for (std::size_t j : r.postprocessed[a]) m[j] = true;
    out.push_back(std::move(m));
  }
  return out;
}

int cmd_train_eval(const Global& g, const TrainEvalArgs& a) {
  const unsigned threads = resolve_threads(g);
  json cfg = {{"corpus", a.corpus},       {"mode", a.mode},         {"seed", a.seed},
              {"held_out", a.held_out},   {"threshold", a.threshold}, {"max_len", a.max_len},
              {"postprocess", a.match},   {"analyze_ce", a.analyze_ce}, {"k", a.k},
              {"ce_mode", a.ce_mode}};
  cfg["model"] = a.model.config();
  if (a.analyze_ce) cfg["classifier"] = a.cls.config();
  log_config("train-eval", cfg, threads);

  if (a.mode != "direct" && a.mode != "sure" && a.mode != "oracle" && a.mode != "pipeline")
    throw UsageError("--mode must be direct, sure, oracle or pipeline");
  if (a.analyze_ce && a.mode == "direct") throw UsageError("--analyze-ce compares a system against direct; pick another mode");
  if (a.max_len == 0) throw UsageError("--max-len must be >= 1");
  const InferenceOptions inf{a.threshold, a.max_len, match_from_string(a.match)};
  const CeMode ce_mode = ce_mode_from_string(a.ce_mode);
  a.model.fixed_weight();

  const auto corpus = load_corpus(a.corpus);
  const bool labeled = std::all_of(corpus.begin(), corpus.end(), [](const Example& e) { return e.labeled(); });
  if (!labeled && (a.mode != "direct" || a.analyze_ce))
    throw Error("train-eval: mode '" + a.mode + "' needs relevance labels on every answer");
  // --held-out 0 evaluates on the training examples themselves.
  std::vector<Example> train = corpus, test = corpus;
  if (a.held_out != 0.0) std::tie(train, test) = split_corpus(corpus, a.held_out, a.seed);
  if (train.empty() || test.empty()) throw Error("train-eval: corpus too small to split");

  auto pairs_of = [&](auto make) {
    std::vector<TrainingPair> p;
    for (const auto& ex : train) p.push_back(make(ex));
    return p;
  };
  // Every model gets its own tuning seed.
  std::optional<NgramSeq2Seq> verifier, direct_model, system_model, extractor;
  if (labeled) verifier = fit_model(pairs_of(oracle_pair), a.model, derive_seed(a.seed, 1), threads);
  if (a.mode == "direct" || a.analyze_ce)
    direct_model = fit_model(pairs_of(direct_pair), a.model, derive_seed(a.seed, 2), threads);
  if (a.mode == "sure") {
    system_model = fit_model(multitask_pairs(train, derive_seed(a.seed, 3)), a.model, derive_seed(a.seed, 4), threads);
  } else if (a.mode == "pipeline") {
    std::vector<TrainingPair> ext;
    for (const auto& ex : train)
      for (std::size_t i = 0; i < ex.answers.size(); ++i) ext.push_back(extraction_pair(ex, i));
    extractor = fit_model(ext, a.model, derive_seed(a.seed, 5), threads);
    system_model = verifier;  // the generator is trained on gold bases, like the verifier
  } else if (a.mode == "oracle") {
    system_model = verifier;
  } else {
    system_model = direct_model;
  }

  auto run_direct = [&](const Example& ex, const NgramSeq2Seq& m) {
    SystemOutput o;
    o.basis = full_input_basis(ex);
    const auto input = generator_input(ex.question, o.basis);
    o.summary = generate_greedy(m, input, a.max_len);
    o.log_likelihood = log_likelihood(m, input, text_tokens(ex.summary));
    if (verifier) o.faith = evaluate_faithfulness(*verifier, SystemKind::Direct, ex.question, Basis::full_input(ex), o.summary);
    o.metrics = score_summary(o.summary, ex);
    return o;
  };
  auto run_system = [&](const Example& ex) {
    if (a.mode == "direct") return run_direct(ex, *system_model);
    SystemOutput o;
    if (a.mode == "oracle") {
      o.basis = gold_basis(ex);
      const auto input = generator_input(ex.question, o.basis);
      o.summary = generate_greedy(*system_model, input, a.max_len);
      o.log_likelihood = log_likelihood(*system_model, input, text_tokens(ex.summary));
      o.faith = evaluate_faithfulness(*verifier, SystemKind::Oracle, ex.question, Basis::gold(ex), o.summary);
    } else {
      const EaResult r = a.mode == "sure" ? run_inference(*system_model, ex, inf)
                                          : run_inference(*extractor, *system_model, ex, inf);
      o.summary = r.final_summary;
      o.basis = r.basis;
      o.log_likelihood = log_likelihood(*system_model, generator_input(ex.question, r.basis), text_tokens(ex.summary));
      o.faith = evaluate_faithfulness(*verifier, SystemKind::ExtractAndGenerate, ex.question, Basis::predicted(r),
                                      o.summary);
      o.selected = selection_masks(ex, r);
    }
    o.metrics = score_summary(o.summary, ex);
    return o;
  };

  std::vector<SystemOutput> sys(test.size()), base(a.analyze_ce ? test.size() : 0);
  parallel_for(test.size(), threads, [&](std::size_t i) {
    sys[i] = run_system(test[i]);
    if (a.analyze_ce) base[i] = run_direct(test[i], *direct_model);
  });

  KahanSum ll, ft, fp;
  std::vector<SummaryMetrics> per;
  Confusion extraction;
  const bool ea = a.mode == "sure" || a.mode == "pipeline";
  for (std::size_t i = 0; i < test.size(); ++i) {
    ll.add(sys[i].log_likelihood);
    ft.add(sys[i].faith.total);
    fp.add(sys[i].faith.per_token);
    per.push_back(sys[i].metrics);
    if (ea) extraction += overlap_report(gold_labels(test[i]), sys[i].selected);
  }
  const double n = static_cast<double>(test.size());
  const double mean_ll = ll.value() / n, mean_ft = ft.value() / n, mean_fp = fp.value() / n;
  const SummaryMetrics mean = mean_metrics(per);

  if (!a.predictions_out.empty()) {
    std::ofstream out(a.predictions_out);
    if (!out) throw Error("cannot write '" + a.predictions_out + "'");
    for (const auto& o : sys) out << join(o.summary) << '\n';
  }
  if (!a.basis_out.empty()) {
    std::ofstream out(a.basis_out);
    if (!out) throw Error("cannot write '" + a.basis_out + "'");
    for (const auto& o : sys) out << join(o.basis) << '\n';
  }
  if (!a.test_out.empty()) save_corpus(test, a.test_out);
  if (!a.verifier_out.empty()) {
    if (!verifier) throw Error("train-eval: no verifier without relevance labels");
    verifier->save(a.verifier_out);
  }

  std::optional<TopBottomReport> report;
  std::optional<CeEstimate> ce;
  if (a.analyze_ce) {
    const auto c1 = train_classifier(train, false, a.cls.opt, threads);
    const auto c2 = train_classifier(train, true, a.cls.opt, threads);
    ce = estimate_ce(c1, c2, test, ce_mode, SubsetSizeModel(train), threads);
    std::vector<MetricDeltas> deltas(6);
    deltas[0] = {"rouge1", {}, 100.0};
    deltas[1] = {"rouge2", {}, 100.0};
    deltas[2] = {"rougeL", {}, 100.0};
    deltas[3] = {"meteor", {}, 100.0};
    deltas[4] = {"faithfulness", {}, 100.0};
    deltas[5] = {"log_likelihood", {}, 100.0};
    for (std::size_t i = 0; i < test.size(); ++i) {
      deltas[0].values.push_back(sys[i].metrics.rouge1 - base[i].metrics.rouge1);
      deltas[1].values.push_back(sys[i].metrics.rouge2 - base[i].metrics.rouge2);
      deltas[2].values.push_back(sys[i].metrics.rougeL - base[i].metrics.rougeL);
      deltas[3].values.push_back(sys[i].metrics.meteor - base[i].metrics.meteor);
      deltas[4].values.push_back(sys[i].faith.total - base[i].faith.total);
      deltas[5].values.push_back(sys[i].log_likelihood - base[i].log_likelihood);
    }
    const std::size_t k = a.k ? a.k : std::min<std::size_t>(10, test.size() / 2);
    if (k == 0) throw Error("train-eval: too few test examples for the top/bottom analysis");
    report = top_bottom_report(ce->per_example, deltas, k);
  }

  const bool has_faith = verifier.has_value();
  if (g.json_out) {
    json j = {{"mode", a.mode},
              {"train_examples", train.size()},
              {"test_examples", test.size()},
              {"copy_weight", system_model->copy_weight()},
              {"log_likelihood", {{"mean", mean_ll}, {"x100", 100.0 * mean_ll}}},
              {"metrics", metrics_json(mean)}};
    if (extractor) j["extractor_copy_weight"] = extractor->copy_weight();
    if (has_faith) {
      j["verifier_copy_weight"] = verifier->copy_weight();
      j["faithfulness"] = {{"mean", mean_ft}, {"x100", 100.0 * mean_ft}, {"per_token", mean_fp}};
    } else {
      j["faithfulness"] = nullptr;
    }
    if (ea)
      j["extraction"] = {{"tp", extraction.tp},
                         {"fp", extraction.fp},
                         {"fn", extraction.fn},
                         {"tn", extraction.tn},
                         {"precision", extraction.precision()},
                         {"recall", extraction.recall()}};
    if (report) {
      json groups = json::array();
      for (const auto& m : report->metrics)
        groups.push_back({{"name", m.name},
                          {"display_scale", m.display_scale},
                          {"top_mean", m.top_mean},
                          {"top_se", m.top_se},
                          {"bottom_mean", m.bottom_mean},
                          {"bottom_se", m.bottom_se},
                          {"t", m.welch.t},
                          {"df", m.welch.df},
                          {"p_value", m.welch.p_value},
                          {"significant", m.welch.significant}});
      j["ce_analysis"] = {{"estimate", estimate_json(*ce, 1.0)},
                          {"k", report->k},
                          {"top", report->top},
                          {"bottom", report->bottom},
                          {"metrics", groups}};
    }
    emit_json(j);
    return 0;
  }

  std::cout << "mode " << a.mode << ": train " << train.size() << ", test " << test.size() << ", copy weight "
            << fmt(system_model->copy_weight(), 2) << '\n';
  print_table(kMetricsHeader, {metrics_row("mean", mean)});
  std::cout << '\n';
  std::vector<std::vector<std::string>> rows{{"log-likelihood", fmt(mean_ll, 4), fmt(100.0 * mean_ll, 2)}};
  if (has_faith) {
    rows.push_back({"faithfulness", fmt(mean_ft, 4), fmt(100.0 * mean_ft, 2)});
    rows.push_back({"faithfulness per token (length-normalized)", fmt(mean_fp, 4), fmt(100.0 * mean_fp, 2)});
  }
  print_table({"score", "raw", "x100"}, rows);
  if (ea) {
    std::cout << "\nextraction vs gold: precision " << fmt(extraction.precision(), 4) << ", recall "
              << fmt(extraction.recall(), 4) << '\n';
  }
  if (report) {
    std::cout << "\nCE " << fmt(ce->ce, 4) << " (se " << fmt(ce->se, 4) << "); top-" << report->k
              << " vs bottom-" << report->k << " examples by CE, deltas vs direct x100\n";
    std::vector<std::vector<std::string>> r;
    for (const auto& m : report->metrics)
      r.push_back({m.name, fmt(m.top_mean * m.display_scale, 2), fmt(m.bottom_mean * m.display_scale, 2),
                   tstat(m.welch.t), fmt(m.welch.p_value, 4), m.welch.significant ? "yes" : "no"});
    print_table({"metric", "top", "bottom", "t", "p", "p < 0.05"}, r);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// distant-label

struct DistantArgs {
  std::string corpus;
  std::string score = "precision";
  std::vector<double> thresholds;
  double threshold = 0.5;
  std::string output;
};

int cmd_distant(const Global& g, const DistantArgs& a) {
  const unsigned threads = resolve_threads(g);
  std::vector<double> sweep = a.thresholds;
  if (sweep.empty())
    for (int i = 1; i <= 10; ++i) sweep.push_back(i / 10.0);
  log_config("distant-label",
             {{"corpus", a.corpus}, {"score", a.score}, {"thresholds", sweep}, {"threshold", a.threshold},
              {"output", a.output}},
             threads);
  const OverlapScore score = overlap_score_from_string(a.score);
  auto corpus = load_corpus(a.corpus);
  if (corpus.empty()) throw Error("distant-label: empty corpus");
  const bool labeled = std::all_of(corpus.begin(), corpus.end(), [](const Example& e) { return e.labeled(); });

  struct Point {
    double threshold;
    Confusion c;
    std::size_t positives = 0, total = 0;
  };
  std::vector<Point> points;
  for (double t : sweep) {
    std::vector<std::vector<std::vector<bool>>> labels(corpus.size());
    parallel_for(corpus.size(), threads, [&](std::size_t i) { labels[i] = distant_label(corpus[i], t, score); });
    Point p{t, {}, 0, 0};
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      for (const auto& ans : labels[i]) {
        p.total += ans.size();
        p.positives += static_cast<std::size_t>(std::count(ans.begin(), ans.end(), true));
      }
      if (labeled) p.c += overlap_report(gold_labels(corpus[i]), labels[i]);
    }
    points.push_back(p);
  }

  if (!a.output.empty()) {
    for (auto& ex : corpus) {
      const auto labels = distant_label(ex, a.threshold, score);
      for (std::size_t i = 0; i < ex.answers.size(); ++i) ex.answers[i].relevance = labels[i];
    }
    save_corpus(corpus, a.output);
  }

  if (g.json_out) {
    json arr = json::array();
    for (const auto& p : points) {
      json e = {{"threshold", p.threshold},
                {"positive_rate", static_cast<double>(p.positives) / static_cast<double>(p.total)}};
      if (labeled)
        e.update({{"tp", p.c.tp},
                  {"fp", p.c.fp},
                  {"fn", p.c.fn},
                  {"tn", p.c.tn},
                  {"precision", p.c.precision()},
                  {"recall", p.c.recall()}});
      arr.push_back(e);
    }
    emit_json({{"score", a.score}, {"gold_labels", labeled}, {"sweep", arr}});
    return 0;
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : points) {
    std::vector<std::string> r{fmt(p.threshold, 2),
                               fmt(static_cast<double>(p.positives) / static_cast<double>(p.total), 4)};
    if (labeled) {
      r.push_back(fmt(p.c.precision(), 4));
      r.push_back(fmt(p.c.recall(), 4));
    }
    rows.push_back(r);
  }
  std::vector<std::string> header{"threshold", "positive rate"};
  if (labeled) header.insert(header.end(), {"precision", "recall"});
  print_table(header, rows);
  if (!a.output.empty()) std::cout << "wrote labels at threshold " << fmt(a.threshold, 2) << " to " << a.output << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// score-faithfulness

struct FaithArgs {
  std::string corpus, predictions, system = "direct", basis, verifier, train;
  std::uint64_t seed = 1;
  ModelArgs model;
};

int cmd_faith(const Global& g, const FaithArgs& a) {
  const unsigned threads = resolve_threads(g);
  json cfg = {{"corpus", a.corpus}, {"predictions", a.predictions}, {"system", a.system},
              {"basis", a.basis},   {"verifier", a.verifier},       {"train", a.train},
              {"seed", a.seed}};
  cfg["model"] = a.model.config();
  log_config("score-faithfulness", cfg, threads);
  if (a.verifier.empty() == a.train.empty()) throw UsageError("give exactly one of --verifier and --train");
  SystemKind kind;
  if (a.system == "direct") kind = SystemKind::Direct;
  else if (a.system == "ea") kind = SystemKind::ExtractAndGenerate;
  else if (a.system == "oracle") kind = SystemKind::Oracle;
  else throw UsageError("--system must be direct, ea or oracle");
  if ((kind == SystemKind::ExtractAndGenerate) != !a.basis.empty())
    throw UsageError("--basis (predicted relevant sentences, one line per example) is required for, and only for, --system ea");

  const auto corpus = load_corpus(a.corpus);
  const auto preds = read_lines(a.predictions);
  if (corpus.empty()) throw Error("score-faithfulness: empty corpus");
  if (preds.size() != corpus.size())
    throw Error("score-faithfulness: " + std::to_string(preds.size()) + " predictions for " +
                std::to_string(corpus.size()) + " examples");
  std::vector<std::string> bases;
  if (!a.basis.empty()) {
    bases = read_lines(a.basis);
    if (bases.size() != corpus.size()) throw Error("score-faithfulness: basis file has the wrong number of lines");
  }

  NgramSeq2Seq verifier;
  if (!a.verifier.empty()) {
    verifier = NgramSeq2Seq::load(a.verifier);
  } else {
    std::vector<TrainingPair> pairs;
    for (const auto& ex : load_corpus(a.train)) pairs.push_back(oracle_pair(ex));
    verifier = fit_model(pairs, a.model, derive_seed(a.seed, 1), threads);
  }

  std::vector<Faithfulness> per(corpus.size());
  parallel_for(corpus.size(), threads, [&](std::size_t i) {
    const Example& ex = corpus[i];
    Basis b = kind == SystemKind::Direct   ? Basis::full_input(ex)
              : kind == SystemKind::Oracle ? Basis::gold(ex)
                                           : Basis{BasisKind::PredictedRelevant, text_tokens(bases[i])};
    per[i] = evaluate_faithfulness(verifier, kind, ex.question, b, text_tokens(preds[i]));
  });
  KahanSum tot, tok;
  for (const auto& f : per) tot.add(f.total), tok.add(f.per_token);
  const double n = static_cast<double>(per.size());
  if (g.json_out) {
    json pe = json::array();
    for (const auto& f : per) pe.push_back({{"total", f.total}, {"per_token", f.per_token}});
    emit_json({{"system", a.system},
               {"examples", per.size()},
               {"mean", tot.value() / n},
               {"x100", 100.0 * tot.value() / n},
               {"per_token", tok.value() / n},
               {"per_example", pe}});
    return 0;
  }
  print_table({"score", "raw", "x100"},
              {{"faithfulness", fmt(tot.value() / n, 4), fmt(100.0 * tot.value() / n, 2)},
               {"per token (length-normalized)", fmt(tok.value() / n, 4), fmt(100.0 * tok.value() / n, 2)}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eac: causal effect of irrelevant sentences, exact and estimated"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  Global g;
  app.add_flag("--json", g.json_out, "Machine-readable JSON on stdout");
  app.add_option("--threads", g.threads, "Worker threads (default: EACL_THREADS, else 1)")->check(CLI::PositiveNumber);
  app.add_flag("--bits", g.bits, "Report entropies in bits instead of nats");

  VerifyArgs verify;
  auto* verify_cmd = app.add_subcommand("verify-theorems", "Check the causal-effect identities on random SEMs");
  verify_cmd->add_option("--n-sems", verify.n_sems, "Random SEMs to check")->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed, "Seed")->capture_default_str();
  verify_cmd->add_option("--max-card", verify.max_card, "Largest cardinality per variable")->capture_default_str();
  verify_cmd->add_option("--concentration", verify.concentration, "Dirichlet concentration of each table row")
      ->capture_default_str();
  verify_cmd->add_option("--sem", verify.sem_files, "Extra SEM JSON files to check");

  SemSource exact;
  auto* exact_cmd = app.add_subcommand("ce-exact", "Exact causal effect of irrelevant sentences for one SEM");
  exact.add_options(exact_cmd);

  CeEstimateArgs est;
  auto* est_cmd = app.add_subcommand("ce-estimate", "Plug-in CE estimate from a labeled corpus");
  est_cmd->add_option("corpus", est.corpus, "Corpus JSONL")->required();
  est_cmd->add_option("--seed", est.seed, "Train/test split seed")->capture_default_str();
  est_cmd->add_option("--mode", est.mode, "set or per-sentence")->capture_default_str();
  est_cmd->add_option("--held-out", est.held_out, "Held-out share")->capture_default_str();
  est.cls.add_options(est_cmd);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth-corpus", "Sample a labeled corpus from a SEM");
  synth.src.add_options(synth_cmd);
  synth_cmd->add_option("--count", synth.count, "Examples")->capture_default_str()->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "Seed")->capture_default_str();
  synth_cmd->add_option("--words-per-symbol", synth.words, "Tokens per sentence symbol")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("-o,--output", synth.output, "Output JSONL")->required();

  MetricsArgs metrics;
  auto* metrics_cmd = app.add_subcommand("metrics", "Score predicted summaries against the corpus");
  metrics_cmd->add_option("predictions", metrics.predictions, "One prediction per line")->required();
  metrics_cmd->add_option("corpus", metrics.corpus, "Corpus JSONL")->required();
  metrics_cmd->add_flag("--per-example", metrics.per_example, "Also list every example");

  TrainEvalArgs te;
  auto* te_cmd = app.add_subcommand("train-eval", "Train n-gram summarizers and evaluate them");
  te_cmd->add_option("corpus", te.corpus, "Corpus JSONL")->required();
  te_cmd->add_option("--mode", te.mode, "direct, sure, oracle or pipeline")->capture_default_str();
  te_cmd->add_option("--seed", te.seed, "Split and sampling seed")->capture_default_str();
  te_cmd->add_option("--held-out", te.held_out, "Held-out share (0: evaluate on the training set)")->capture_default_str();
  te.model.add_options(te_cmd);
  te_cmd->add_option("--threshold", te.threshold, "Post-processing threshold")->capture_default_str();
  te_cmd->add_option("--max-len", te.max_len, "Generation length cap")->capture_default_str();
  te_cmd->add_option("--postprocess", te.match, "raw-precision or sentence-coverage")->capture_default_str();
  te_cmd->add_flag("--analyze-ce", te.analyze_ce, "Top/bottom-k comparison against direct by estimated CE");
  te_cmd->add_option("--k", te.k, "Group size for --analyze-ce (0: min(10, n/2))")->capture_default_str();
  te_cmd->add_option("--ce-mode", te.ce_mode, "set or per-sentence")->capture_default_str();
  te.cls.add_options(te_cmd);
  te_cmd->add_option("--predictions-out", te.predictions_out, "Write generated summaries here");
  te_cmd->add_option("--basis-out", te.basis_out, "Write each summary's generation basis here");
  te_cmd->add_option("--save-verifier", te.verifier_out, "Write the oracle verifier model here");
  te_cmd->add_option("--test-out", te.test_out, "Write the held-out examples here, aligned with --predictions-out");

  DistantArgs dl;
  auto* dl_cmd = app.add_subcommand("distant-label", "Label sentences by overlap with the summary");
  dl_cmd->add_option("corpus", dl.corpus, "Corpus JSONL")->required();
  dl_cmd->add_option("--score", dl.score, "precision, recall or f1")->capture_default_str();
  dl_cmd->add_option("--thresholds", dl.thresholds, "Sweep values (default 0.1 ... 1.0)")->delimiter(',');
  dl_cmd->add_option("--threshold", dl.threshold, "Threshold for --output")->capture_default_str();
  dl_cmd->add_option("-o,--output", dl.output, "Write the relabeled corpus here");

  FaithArgs fa;
  auto* fa_cmd = app.add_subcommand("score-faithfulness", "Verifier log-likelihood of predicted summaries");
  fa_cmd->add_option("predictions", fa.predictions, "One prediction per line")->required();
  fa_cmd->add_option("corpus", fa.corpus, "Corpus JSONL")->required();
  fa_cmd->add_option("--system", fa.system, "direct, ea or oracle")->capture_default_str();
  fa_cmd->add_option("--basis", fa.basis, "Predicted relevant sentences per example (ea only)");
  fa_cmd->add_option("--verifier", fa.verifier, "Trained verifier (eac-ngram JSON)");
  fa_cmd->add_option("--train", fa.train, "Labeled corpus to train the verifier on");
  fa_cmd->add_option("--seed", fa.seed, "Tuning seed")->capture_default_str();
  fa.model.add_options(fa_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*verify_cmd) return cmd_verify(g, verify);
    if (*exact_cmd) return cmd_ce_exact(g, exact);
    if (*est_cmd) return cmd_ce_estimate(g, est);
    if (*synth_cmd) return cmd_synth(g, synth);
    if (*metrics_cmd) return cmd_metrics(g, metrics);
    if (*te_cmd) return cmd_train_eval(g, te);
    if (*dl_cmd) return cmd_distant(g, dl);
    if (*fa_cmd) return cmd_faith(g, fa);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
