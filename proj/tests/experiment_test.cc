/*
 * Copyright 2026 The fairscl Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

#include "fairscl/checkpoint.hpp"
#include "fairscl/error.hpp"
#include "fairscl/experiment.hpp"
#include "fairscl/model.hpp"
#include "test_util.hpp"

namespace fairscl {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::Slurp;
using testing::TempDir;
using testing::ThrownKind;

ExperimentConfig SmallConfig(const fs::path& out) {
  ExperimentConfig c;
  c.data.synthetic.n = 800;
  c.methods = {Method::kErm, Method::kProposed};
  c.train.pretrain_epochs = 2;
  c.train.encoder_widths = {16, 16};
  c.train.embed_dim = 16;
  c.bootstrap = 200;
  c.seed = 7;
  c.out_dir = out;
  return c;
}

json WithoutTimestamp(const std::string& text) {
  json j = json::parse(text);
  j.erase("generated_at");
  return j;
}

TEST(ExperimentTest, StructureAndFiles) {
  const fs::path out = TempDir("exp_structure");
  const ExperimentReport r = RunExperiment(SmallConfig(out));
  ASSERT_TRUE(r.failures.empty());
  ASSERT_EQ(r.results.size(), 2u);
  ASSERT_EQ(r.ttests.size(), 1u);
  EXPECT_EQ(r.ttests[0].baseline, Method::kErm);
  EXPECT_EQ(r.ttests[0].result.df, 199);
  EXPECT_EQ(r.train_size + r.test_size, 800u);
  for (const MethodResult& m : r.results) {
    EXPECT_EQ(m.Estimate("delta_mauc").boot.replicates.size(), 200u);
    EXPECT_EQ(m.Estimate("delta_mauc").boot.point, m.fairness.deltas.d_mauc);
    EXPECT_EQ(m.Estimate("overall_auc").boot.point, m.fairness.overall_auc);
    EXPECT_TRUE(fs::exists(out / m.checkpoint));
  }
  EXPECT_EQ(r.Find(Method::kProposed, "group")->checkpoint, "checkpoints/proposed.bin");
  EXPECT_GT(r.Find(Method::kProposed, "group")->anchors_used, 0u);
  for (const char* f : {"report.json", "report.md", "report.csv", "dataset.csv",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const json manifest = json::parse(Slurp(out / "manifest.json"));
  EXPECT_EQ(manifest["status"], "complete");
  EXPECT_EQ(IngestTable(out / "dataset.csv").size(), 800u);
}

TEST(ExperimentTest, ResamplesSharedAcrossMethods) {
  const fs::path out = TempDir("exp_shared");
  const ExperimentReport r = RunExperiment(SmallConfig(out));
  ASSERT_EQ(r.results.size(), 2u);
  EXPECT_NE(r.results[0].resample_digest, 0u);
  EXPECT_EQ(r.results[0].resample_digest, r.results[1].resample_digest);
  const auto& a = r.results[0].Estimate("delta_mauc").boot;
  const auto& b = r.results[1].Estimate("delta_mauc").boot;
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.redraws, b.redraws);
}

TEST(ExperimentTest, ReportsIdenticalAcrossRuns) {
  const fs::path out = TempDir("exp_repeat");
  const ExperimentConfig c = SmallConfig(out);
  RunExperiment(c);
  const std::string json1 = Slurp(out / "report.json");
  const std::string md1 = Slurp(out / "report.md");
  const std::string csv1 = Slurp(out / "report.csv");
  const std::string ckpt1 = Slurp(out / "checkpoints/proposed.bin");
  RunExperiment(c);
  EXPECT_EQ(WithoutTimestamp(json1), WithoutTimestamp(Slurp(out / "report.json")));
  EXPECT_EQ(md1, Slurp(out / "report.md"));
  EXPECT_EQ(csv1, Slurp(out / "report.csv"));
  EXPECT_EQ(ckpt1, Slurp(out / "checkpoints/proposed.bin"));
}

// Every markdown cell of the bootstrap table, read back, agrees with the JSON
// estimates at four decimals.
TEST(ExperimentTest, MarkdownAgreesWithJson) {
  const fs::path out = TempDir("exp_markdown");
  RunExperiment(SmallConfig(out));
  const ExperimentReport r = ReportFromJson(Slurp(out / "report.json"));
  std::istringstream md(Slurp(out / "report.md"));
  std::string line;
  size_t checked = 0;
  while (std::getline(md, line)) {
    std::string metric;
    if (line.rfind("| Overall AUC |", 0) == 0) metric = "overall_auc";
    if (line.rfind("| ΔmAUC |", 0) == 0) metric = "delta_mauc";
    if (line.rfind("| A mAUC |", 0) == 0) metric = "mauc:A";
    if (metric.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, '|')) cells.push_back(cell);
    ASSERT_EQ(cells.size(), 4u) << line;  // "", label, erm, proposed
    for (size_t k = 0; k < 2; ++k) {
      double p = 0, lo = 0, hi = 0;
      ASSERT_EQ(std::sscanf(cells[k + 2].c_str(), " %lf (%lf-%lf)", &p, &lo, &hi), 3);
      const BootstrapResult& b = r.results[k].Estimate(metric).boot;
      EXPECT_NEAR(p, b.point, 5e-5 + 1e-12);
      EXPECT_NEAR(lo, b.ci_low, 5e-5 + 1e-12);
      EXPECT_NEAR(hi, b.ci_high, 5e-5 + 1e-12);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 6u);
}

TEST(ExperimentTest, JsonRoundTrip) {
  const fs::path out = TempDir("exp_roundtrip");
  const ExperimentReport r = RunExperiment(SmallConfig(out));
  const std::string text = ReportToJson(r);
  EXPECT_EQ(ReportToJson(ReportFromJson(text)), text);
  EXPECT_EQ(RenderMarkdown(ReportFromJson(text)), RenderMarkdown(r));
  EXPECT_EQ(RenderDelimited(ReportFromJson(text)), RenderDelimited(r));
}

TEST(ExperimentTest, UnwritableOutputFailsBeforeTraining) {
  const fs::path dir = TempDir("exp_unwritable");
  std::ofstream(dir / "file") << "x";
  ExperimentConfig c = SmallConfig(dir / "file" / "sub");
  c.train.pretrain_epochs = 1000;  // would take minutes if training started
  EXPECT_EQ(ThrownKind([&] { RunExperiment(c); }), ErrorKind::kIo);
}

TEST(ExperimentTest, MissingInputIsIoError) {
  ExperimentConfig c = SmallConfig(TempDir("exp_missing"));
  c.data.path = "/nonexistent/fairscl.csv";
  EXPECT_EQ(ThrownKind([&] { RunExperiment(c); }), ErrorKind::kIo);
}

TEST(FormatCellTest, FourDecimals) {
  EXPECT_EQ(FormatCell(0.0116, 0.0110, 0.0123), "0.0116 (0.0110-0.0123)");
  EXPECT_EQ(FormatCell(0.81674, 0.8, 0.83336), "0.8167 (0.8000-0.8334)");
}

TEST(ConfigTest, Validation) {
  ExperimentConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.methods.clear();
  EXPECT_EQ(ThrownKind([&] { c.Validate(); }), ErrorKind::kConfig);
  c = {};
  c.methods = {Method::kErm, Method::kErm};
  EXPECT_EQ(ThrownKind([&] { c.Validate(); }), ErrorKind::kConfig);
  c = {};
  c.attributes.clear();
  EXPECT_EQ(ThrownKind([&] { c.Validate(); }), ErrorKind::kConfig);
  c = {};
  c.bootstrap = 1;
  EXPECT_EQ(ThrownKind([&] { c.Validate(); }), ErrorKind::kConfig);
  c = {};
  c.train.learning_rate = -1.0;
  EXPECT_EQ(ThrownKind([&] { c.Validate(); }), ErrorKind::kConfig);
}

TEST(ConfigTest, ParseAndDefaults) {
  const ExperimentConfig c = ParseExperimentConfig(
      R"({"methods": ["erm", "proposed"], "seed": 3, "bootstrap": 50,
          "train": {"preset": "paper", "pretrain_epochs": 4}})");
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::kErm, Method::kProposed}));
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.bootstrap, 50u);
  EXPECT_EQ(c.train_preset, "paper");
  EXPECT_EQ(c.train.pretrain_epochs, 4);
  EXPECT_EQ(c.train.learning_rate, 1e-4);
  EXPECT_EQ(c.attributes, std::vector<std::string>{"group"});
  EXPECT_EQ(ParseExperimentConfig("{}").train.learning_rate, 1e-3);
  const ExperimentConfig again = ParseExperimentConfig(ExperimentConfigToJson(c));
  EXPECT_EQ(ExperimentConfigToJson(again), ExperimentConfigToJson(c));
}

TEST(ConfigTest, Rejections) {
  for (const char* text :
       {R"({"sede": 1})", R"({"train": {"lr": 0.1}})", R"({"methods": ["bogus"]})",
        R"({"methods": []})", R"({"data": {"synthetic": {"size": 3}}})",
        R"({"train": {"preset": "huge"}})", R"({"bootstrap": "many"})", "{"}) {
    EXPECT_EQ(ThrownKind([&] { ParseExperimentConfig(text).Validate(); }),
              ErrorKind::kConfig)
        << text;
  }
  EXPECT_EQ(ThrownKind([] { LoadExperimentConfig("/nonexistent/c.json"); }),
            ErrorKind::kConfig);
}

TEST(MethodNameTest, RoundTrip) {
  for (Method m : {Method::kErm, Method::kBalanced, Method::kAdv, Method::kScl,
                   Method::kProposed}) {
    EXPECT_EQ(ParseMethod(MethodName(m)), m);
  }
  EXPECT_EQ(ThrownKind([] { ParseMethod("ERM2"); }), ErrorKind::kConfig);
  EXPECT_EQ(ThrownKind([] { ParseFormat("pdf"); }), ErrorKind::kConfig);
}

ModelState TrainedState() {
  ModelShape shape;
  shape.feature_dim = 5;
  shape.encoder_widths = {7, 3};
  shape.embed_dim = 4;
  shape.group_classes = 3;
  ModelState s = ModelState::Initialize(shape, 9);
  s.params.prediction_head.weight.setRandom();
  s.first_moment = Params::ZerosLike(s.params);
  s.second_moment = Params::ZerosLike(s.params);
  s.first_moment.encoder[1].weight.setConstant(0.125);
  s.second_moment.group_head.bias.setConstant(1e-300);
  s.step = 17;
  return s;
}

TEST(CheckpointTest, RoundTripIsExact) {
  const fs::path dir = TempDir("ckpt_roundtrip");
  const ModelState s = TrainedState();
  SaveCheckpoint(s, dir / "m.bin");
  EXPECT_EQ(LoadCheckpoint(dir / "m.bin"), s);
  SaveCheckpoint(LoadCheckpoint(dir / "m.bin"), dir / "m2.bin");
  EXPECT_EQ(Slurp(dir / "m.bin"), Slurp(dir / "m2.bin"));
  EXPECT_EQ(Slurp(dir / "m.bin").substr(0, 8), "FSCLCKPT");
}

TEST(CheckpointTest, CorruptFiles) {
  const fs::path dir = TempDir("ckpt_corrupt");
  SaveCheckpoint(TrainedState(), dir / "m.bin");
  const std::string bytes = Slurp(dir / "m.bin");

  std::string bad = bytes;
  bad[0] = 'X';
  std::ofstream(dir / "magic.bin", std::ios::binary) << bad;
  EXPECT_EQ(ThrownKind([&] { LoadCheckpoint(dir / "magic.bin"); }), ErrorKind::kParse);

  bad = bytes;
  bad[8] = 99;
  std::ofstream(dir / "version.bin", std::ios::binary) << bad;
  EXPECT_EQ(ThrownKind([&] { LoadCheckpoint(dir / "version.bin"); }), ErrorKind::kParse);

  for (size_t cut : {size_t{4}, size_t{30}, bytes.size() / 2, bytes.size() - 1}) {
    std::ofstream(dir / "short.bin", std::ios::binary | std::ios::trunc)
        << bytes.substr(0, cut);
    EXPECT_EQ(ThrownKind([&] { LoadCheckpoint(dir / "short.bin"); }), ErrorKind::kParse)
        << cut;
  }
  std::ofstream(dir / "long.bin", std::ios::binary) << bytes << "junk";
  EXPECT_EQ(ThrownKind([&] { LoadCheckpoint(dir / "long.bin"); }), ErrorKind::kParse);
  EXPECT_EQ(ThrownKind([&] { LoadCheckpoint(dir / "absent.bin"); }), ErrorKind::kIo);
  EXPECT_EQ(ThrownKind([&] { SaveCheckpoint(TrainedState(), "/nonexistent/x.bin"); }),
            ErrorKind::kIo);
}

// Exit status of the command line tool with `args`; output goes to `log`.
int RunCli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string(FAIRSCL_CLI_PATH) + " " + args + " >" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST(CliTest, ExitCodes) {
  const fs::path dir = TempDir("cli");
  const fs::path log = dir / "log.txt";
  EXPECT_EQ(RunCli("", log), kExitConfig);
  EXPECT_EQ(RunCli("frobnicate", log), kExitConfig);
  EXPECT_EQ(RunCli("run --methods bogus --out " + (dir / "o").string(), log), kExitConfig);
  EXPECT_EQ(RunCli("run --bootstrap 1 --out " + (dir / "o").string(), log), kExitConfig);
  EXPECT_EQ(RunCli("run --data /nonexistent/d.csv --out " + (dir / "o").string(), log),
            kExitIo);
  EXPECT_EQ(RunCli("evaluate --data /nonexistent/d.csv --checkpoint x.bin", log),
            kExitIo);

  std::ofstream(dir / "bad.csv") << "id,label,group,f0\nr0,1,A,0.5\nr1,2,B,0.1\n";
  EXPECT_EQ(RunCli("run --data " + (dir / "bad.csv").string() + " --out " +
                       (dir / "o").string(),
                   log),
            kExitData);
  EXPECT_NE(Slurp(log).find("line 3"), std::string::npos) << Slurp(log);
}

TEST(CliTest, GenerateTrainEvaluateReport) {
  const fs::path dir = TempDir("cli_flow");
  const fs::path log = dir / "log.txt";
  {
    std::ofstream cfg(dir / "config.json");
    cfg << R"({"data": {"synthetic": {"n": 600}}, "methods": ["erm", "proposed"],
               "bootstrap": 20, "train": {"pretrain_epochs": 1,
               "encoder_widths": [8], "embed_dim": 8}})";
  }
  const std::string config = " --config " + (dir / "config.json").string();
  ASSERT_EQ(RunCli("generate" + config + " --seed 2 --out " + (dir / "gen").string(), log),
            kExitOk)
      << Slurp(log);
  const fs::path data = dir / "gen" / "dataset.csv";
  EXPECT_EQ(IngestTable(data).size(), 600u);

  ASSERT_EQ(RunCli("train" + config + " --data " + data.string() + " --out " +
                       (dir / "tr").string(),
                   log),
            kExitOk)
      << Slurp(log);
  const fs::path ckpt = dir / "tr" / "checkpoints" / "proposed.bin";
  ASSERT_TRUE(fs::exists(ckpt));

  ASSERT_EQ(RunCli("evaluate" + config + " --data " + data.string() + " --checkpoint " +
                       ckpt.string(),
                   log),
            kExitOk)
      << Slurp(log);
  const json eval = json::parse(Slurp(log));
  ASSERT_TRUE(eval.is_array());
  EXPECT_GT(eval[0]["overall_auc"].get<double>(), 0.5);

  const fs::path run_out = dir / "run";
  ASSERT_EQ(RunCli("run" + config + " --out " + run_out.string(), log), kExitOk)
      << Slurp(log);
  const std::string md = Slurp(run_out / "report.md");
  fs::remove(run_out / "report.md");
  ASSERT_EQ(RunCli("report --out " + run_out.string() + " --format markdown", log),
            kExitOk)
      << Slurp(log);
  EXPECT_EQ(Slurp(run_out / "report.md"), md);
  EXPECT_EQ(RunCli("report --out " + (dir / "nothing").string(), log), kExitIo);
}

// Every record of group A is positive and every record of group B negative:
// the group-aware objective has no anchor and the run ends partial.
TEST(CliTest, TrainingFailureExitCode) {
  const fs::path dir = TempDir("cli_infeasible");
  {
    std::ofstream csv(dir / "d.csv");
    csv << "id,label,group,f0,f1\n";
    for (int i = 0; i < 200; ++i) {
      csv << 'r' << i << ',' << i % 2 << ',' << (i % 2 ? 'A' : 'B') << ',' << i * 0.01
          << ',' << (i % 7) * 0.1 << '\n';
    }
  }
  const int code = RunCli("run --methods proposed --bootstrap 10 --data " +
                              (dir / "d.csv").string() + " --out " +
                              (dir / "o").string(),
                          dir / "log.txt");
  EXPECT_EQ(code, kExitTraining) << Slurp(dir / "log.txt");
  EXPECT_NE(Slurp(dir / "o" / "manifest.json").find("partial"), std::string::npos);
}

}  // namespace
}  // namespace fairscl
