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

#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("eac_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  // Exit status of `eac <args>`; stdout is kept in out_.
  int run(const std::string& args) {
    const std::string cmd = std::string(EAC_BINARY) + " " + args + " > '" + path("stdout") + "' 2>/dev/null";
    const int status = std::system(cmd.c_str());
    std::ifstream in(path("stdout"));
    std::ostringstream s;
    s << in.rdbuf();
    out_ = s.str();
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  json run_json(const std::string& args) {
    EXPECT_EQ(run("--json " + args), 0) << args;
    return json::parse(out_);
  }

  fs::path dir_;
  std::string out_;
};

const char* kExample =
    R"({"answers":[{"relevance":[true,false],"sentences":["Seal the gaps around pipes.","My cat is orange."]},)"
    R"({"relevance":[false,true],"sentences":["I moved last year.","Steel wool blocks small holes."]}],)"
    R"("cluster_summaries":["Seal gaps around pipes.","Block holes with steel wool."],)"
    R"("question":"How do I keep mice out?","summary":"Seal gaps around pipes and block holes with steel wool."})";

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("ce-exact --no-such-flag"), 2);
  EXPECT_EQ(run("ce-exact --example sideways"), 1);
  EXPECT_EQ(run("train-eval " + path("missing.jsonl")), 1);
  EXPECT_EQ(run("train-eval x.jsonl --copy-weight 2"), 2);
  EXPECT_EQ(run("--help"), 0);
  EXPECT_EQ(run("verify-theorems --n-sems 20"), 0);
}

TEST_F(Cli, VerifyTheorems) {
  const json j = run_json("verify-theorems");
  EXPECT_EQ(j["checked"], 200);
  EXPECT_TRUE(j["pass"]);
  EXPECT_LE(j["max_residual_entropy_identity"].get<double>(), 1e-10);
  EXPECT_LE(j["max_residual_loss_identity"].get<double>(), 1e-10);
  const json none = run_json("verify-theorems --n-sems 0");
  EXPECT_EQ(none["checked"], 0);
  EXPECT_TRUE(none["pass"]);
  // A non-normalized generator row is rejected when the SEM is built.
  write("bad.json",
        R"({"format":"eac-sem/1","cardinalities":{"Q":1,"X":1,"X_R":1,"Y":2},"q_prior":[1.0],)"
        R"("x_given_q":[[1.0]],"extractor":[[1.0]],"generator":[[0.7,0.7]]})");
  EXPECT_EQ(run("verify-theorems --n-sems 3 --sem " + path("bad.json")), 1);
}

TEST_F(Cli, CeExactExamples) {
  EXPECT_NEAR(run_json("ce-exact --example uniform-pick --n 8")["ce"].get<double>(), 2.079442, 1e-6);
  EXPECT_EQ(run_json("ce-exact --example all-relevant")["ce"].get<double>(), 0.0);
  EXPECT_EQ(run_json("ce-exact --example first-only")["ce"].get<double>(), 0.0);
  EXPECT_NEAR(run_json("--bits ce-exact --example uniform-pick --n 8")["ce"].get<double>(), 3.0, 1e-12);
  write("up.json", R"({"kind":"uniform-pick","n_sentences":2})");
  EXPECT_NEAR(run_json("ce-exact --sem " + path("up.json"))["ce"].get<double>(), std::log(2.0), 1e-12);
}

TEST_F(Cli, SynthAndEstimate) {
  EXPECT_EQ(run_json("synth-corpus --example uniform-pick --n 4 --count 2000 --seed 4 -o " + path("c.jsonl"))["examples"],
            2000);
  const json e = run_json("ce-estimate " + path("c.jsonl"));
  EXPECT_NEAR(e["ce"].get<double>(), std::log(4.0), 0.15 * std::log(4.0));
  EXPECT_EQ(e["test_examples"], 400);
  EXPECT_EQ(run_json("ce-estimate " + path("c.jsonl") + " --mode per-sentence")["mode"], "per-sentence");
  EXPECT_EQ(run("ce-estimate " + path("c.jsonl") + " --mode both"), 1);
}

TEST_F(Cli, MetricsAgainstReferences) {
  write("c.jsonl", std::string(kExample) + "\n" + kExample + "\n");
  write("same.txt", "Seal gaps around pipes and block holes with steel wool.\nSeal gaps around pipes and block holes with steel wool.\n");
  const json same = run_json("metrics " + path("same.txt") + " " + path("c.jsonl"));
  for (const char* k : {"rouge1", "rouge2", "rougeL"}) EXPECT_EQ(same["mean"][k].get<double>(), 1.0) << k;
  EXPECT_EQ(same["mean"]["perspective"].get<double>(), 1.0);
  write("empty.txt", "\n\n");
  const json empty = run_json("metrics " + path("empty.txt") + " " + path("c.jsonl"));
  for (const char* k : {"rouge1", "rouge2", "rougeL", "meteor", "perspective", "length"})
    EXPECT_EQ(empty["mean"][k].get<double>(), 0.0) << k;
  write("short.txt", "one line\n");
  EXPECT_EQ(run("metrics " + path("short.txt") + " " + path("c.jsonl")), 1);
}

TEST_F(Cli, MemorizationSmokeTest) {
  write("one.jsonl", std::string(kExample) + "\n");
  for (const char* mode : {"direct", "oracle", "sure", "pipeline"}) {
    const json j = run_json("train-eval " + path("one.jsonl") + " --held-out 0 --alpha 1e-9 --copy-weight 0 --mode " +
                            mode + " --predictions-out " + path("p.txt"));
    EXPECT_NEAR(j["log_likelihood"]["mean"].get<double>(), 0.0, 1e-5) << mode;
    EXPECT_EQ(j["metrics"]["rouge1"].get<double>(), 1.0) << mode;
    std::ifstream in(path("p.txt"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "seal gaps around pipes and block holes with steel wool") << mode;
  }
}

TEST_F(Cli, TrainEvalOnSyntheticCorpus) {
  ASSERT_EQ(run("synth-corpus --example uniform-pick --n 4 --count 1500 --seed 2 -o " + path("c.jsonl")), 0);
  const json oracle = run_json("train-eval " + path("c.jsonl") + " --mode oracle");
  const json direct = run_json("train-eval " + path("c.jsonl") + " --mode direct");
  EXPECT_GE(oracle["log_likelihood"]["mean"].get<double>(), direct["log_likelihood"]["mean"].get<double>());
  EXPECT_DOUBLE_EQ(oracle["log_likelihood"]["x100"].get<double>(), 100 * oracle["log_likelihood"]["mean"].get<double>());
  const json ea = run_json("train-eval " + path("c.jsonl") + " --mode pipeline --analyze-ce --k 5");
  ASSERT_TRUE(ea.contains("ce_analysis"));
  EXPECT_EQ(ea["ce_analysis"]["top"].size(), 5u);
  EXPECT_EQ(ea["ce_analysis"]["metrics"].size(), 6u);
  EXPECT_EQ(run("train-eval " + path("c.jsonl") + " --mode direct --analyze-ce"), 2);
  // Supervised modes need labels.
  write("unlabeled.jsonl", R"({"answers":[{"sentences":["a."]}],"question":"q?","summary":"a."})"
                           "\n" R"({"answers":[{"sentences":["b."]}],"question":"q?","summary":"b."})" "\n");
  EXPECT_EQ(run("train-eval " + path("unlabeled.jsonl") + " --mode oracle --held-out 0.5"), 1);
  EXPECT_EQ(run("train-eval " + path("unlabeled.jsonl") + " --mode direct --held-out 0.5"), 0);
}

TEST_F(Cli, FaithfulnessMatchesTrainEval) {
  ASSERT_EQ(run("synth-corpus --example uniform-pick --n 3 --count 500 --seed 2 -o " + path("c.jsonl")), 0);
  const json te = run_json("train-eval " + path("c.jsonl") + " --mode sure --predictions-out " + path("p.txt") +
                           " --basis-out " + path("b.txt") + " --test-out " + path("t.jsonl") + " --save-verifier " +
                           path("v.json"));
  const json f = run_json("score-faithfulness " + path("p.txt") + " " + path("t.jsonl") + " --system ea --basis " +
                          path("b.txt") + " --verifier " + path("v.json"));
  EXPECT_NEAR(f["mean"].get<double>(), te["faithfulness"]["mean"].get<double>(), 1e-12);
  EXPECT_EQ(run("score-faithfulness " + path("p.txt") + " " + path("t.jsonl") + " --system ea --verifier " +
                path("v.json")),
            2);
  EXPECT_EQ(run("score-faithfulness " + path("p.txt") + " " + path("t.jsonl")), 2);
}

TEST_F(Cli, DistantLabelSweep) {
  write("c.jsonl", std::string(kExample) + "\n");
  const json j = run_json("distant-label " + path("c.jsonl") + " --thresholds 0.5,0.9 -o " + path("out.jsonl"));
  ASSERT_EQ(j["sweep"].size(), 2u);
  EXPECT_TRUE(j["gold_labels"]);
  // Both gold sentences share 4 of their 5 stems with the summary; the others none.
  EXPECT_EQ(j["sweep"][0]["tp"], 2);
  EXPECT_EQ(j["sweep"][0]["fp"], 0);
  EXPECT_EQ(j["sweep"][1]["tp"], 0);
  EXPECT_EQ(j["sweep"][1]["fn"], 2);
  EXPECT_EQ(run("distant-label " + path("c.jsonl") + " --score jaccard"), 1);
}

}  // namespace
