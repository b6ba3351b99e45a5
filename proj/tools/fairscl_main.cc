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

// fairscl command line tool.
//
//   fairscl generate --out DIR [--config PATH] [--seed N]
//   fairscl train    --data CSV --out DIR [--methods LIST] [--attribute NAME]
//   fairscl evaluate --data CSV --checkpoint PATH --attribute NAME
//   fairscl run      [--config PATH] [--seed N] [--methods LIST] ...
//   fairscl report   --out DIR [--format LIST]
//
// Exit codes: 0 ok, 1 internal, 2 config, 3 data, 4 training, 5 I/O.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairscl/checkpoint.hpp"
#include "fairscl/error.hpp"
#include "fairscl/experiment.hpp"
#include "json.hpp"

namespace {

using fairscl::Error;
using fairscl::ErrorKind;
using fairscl::ExperimentConfig;

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Flags {
  std::string config;
  std::optional<uint64_t> seed;
  std::string methods;
  std::string attribute;
  std::optional<size_t> bootstrap;
  std::string out;
  std::string format;
  std::string data;
  std::string test_data;
  std::string checkpoint;
  std::optional<double> threshold;
};

void AddCommon(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON experiment config");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--out", f.out, "Output directory");
}

// Config file first, then flags on top.
ExperimentConfig BuildConfig(const Flags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{}
                                        : fairscl::LoadExperimentConfig(f.config);
  if (f.seed) c.seed = *f.seed;
  if (!f.methods.empty()) {
    c.methods.clear();
    for (const auto& m : SplitList(f.methods)) c.methods.push_back(fairscl::ParseMethod(m));
  }
  if (!f.attribute.empty()) c.attributes = SplitList(f.attribute);
  if (f.bootstrap) c.bootstrap = *f.bootstrap;
  if (!f.out.empty()) c.out_dir = f.out;
  if (!f.format.empty()) {
    c.formats.clear();
    for (const auto& n : SplitList(f.format)) c.formats.push_back(fairscl::ParseFormat(n));
  }
  if (!f.data.empty()) c.data.path = f.data;
  if (!f.test_data.empty()) c.data.test_path = f.test_data;
  if (f.threshold) c.threshold = *f.threshold;
  return c;
}

int Generate(const Flags& f) {
  const ExperimentConfig c = BuildConfig(f);
  std::filesystem::create_directories(c.out_dir);
  const fairscl::Dataset ds = fairscl::GenerateSynthetic(c.data.synthetic, c.seed);
  const auto path = c.out_dir / "dataset.csv";
  fairscl::EmitTable(ds, path);
  std::cout << "wrote " << ds.size() << " records to " << path.string() << "\n";
  return 0;
}

int Train(const Flags& f) {
  ExperimentConfig c = BuildConfig(f);
  c.Validate();
  std::filesystem::create_directories(c.out_dir / "checkpoints");
  const fairscl::Dataset ds =
      c.data.path ? (c.data.schema ? fairscl::IngestTable(*c.data.path, *c.data.schema)
                                   : fairscl::IngestTable(*c.data.path))
                  : fairscl::GenerateSynthetic(c.data.synthetic, c.seed);
  fairscl::TrainConfig tc = c.train;
  tc.seed = fairscl::DeriveSeed(c.seed, "train");
  tc.attribute = c.attributes.front();
  for (fairscl::Method m : c.methods) {
    const fairscl::TrainResult r = fairscl::TrainMethod(m, ds, tc);
    const auto path =
        c.out_dir / "checkpoints" / (std::string(fairscl::MethodName(m)) + ".bin");
    fairscl::SaveCheckpoint(r.state, path);
    for (const auto& w : r.log.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << fairscl::MethodName(m) << ": wrote " << path.string() << "\n";
  }
  return 0;
}

int Evaluate(const Flags& f) {
  ExperimentConfig c = BuildConfig(f);
  if (f.data.empty() || f.checkpoint.empty()) {
    throw Error(ErrorKind::kConfig, "evaluate needs --data and --checkpoint");
  }
  const fairscl::Dataset ds =
      c.data.schema ? fairscl::IngestTable(*c.data.path, *c.data.schema)
                    : fairscl::IngestTable(*c.data.path);
  const fairscl::ModelState state = fairscl::LoadCheckpoint(f.checkpoint);
  nlohmann::json out = nlohmann::json::array();
  for (const std::string& attribute : c.attributes) {
    const fairscl::ScoredSet s = fairscl::Predict(state, ds, attribute);
    const fairscl::FairnessReport rep = fairscl::ComputeFairnessReport(s, c.threshold);
    const auto boot = fairscl::Bootstrap(
        [](const fairscl::ScoredSet& x) {
          return fairscl::MaxMinGap(fairscl::MarginalAucs(x));
        },
        s, c.bootstrap, fairscl::DeriveSeed(c.seed, "bootstrap/" + attribute));
    nlohmann::json groups = nlohmann::json::object();
    for (const auto& [cat, g] : rep.per_group) {
      groups[cat] = {{"mauc", g.mauc}, {"tpr", g.tpr}, {"fpr", g.fpr},
                     {"bs", g.bs},     {"n_pos", g.n_pos}, {"n_total", g.n_total}};
    }
    out.push_back({{"attribute", attribute},
                   {"overall_auc", rep.overall_auc},
                   {"per_group", groups},
                   {"delta_mauc", {{"point", boot.point},
                                   {"ci_low", boot.ci_low},
                                   {"ci_high", boot.ci_high},
                                   {"B", boot.B}}},
                   {"d_tpr", rep.deltas.d_tpr},
                   {"d_fpr", rep.deltas.d_fpr},
                   {"d_bs", rep.deltas.d_bs}});
  }
  const std::string text = out.dump(2) + "\n";
  std::cout << text;
  if (!f.out.empty()) {
    std::filesystem::create_directories(f.out);
    fairscl::WriteTextFile(std::filesystem::path(f.out) / "evaluation.json", text);
  }
  return 0;
}

int Run(const Flags& f) {
  const ExperimentConfig c = BuildConfig(f);
  const fairscl::ExperimentReport report = fairscl::RunExperiment(c);
  for (const auto& r : report.results) {
    const auto& e = r.Estimate("delta_mauc");
    std::cout << fairscl::MethodName(r.method) << " [" << r.attribute
              << "] overall AUC "
              << fairscl::FormatCell(r.Estimate("overall_auc").boot.point,
                                     r.Estimate("overall_auc").boot.ci_low,
                                     r.Estimate("overall_auc").boot.ci_high)
              << ", dmAUC "
              << fairscl::FormatCell(e.boot.point, e.boot.ci_low, e.boot.ci_high)
              << "\n";
  }
  for (const auto& t : report.ttests) {
    std::printf("t-test [%s] proposed vs %s: t = %.3f, p = %.4g\n",
                t.attribute.c_str(), std::string(fairscl::MethodName(t.baseline)).c_str(),
                t.result.t, t.result.p);
  }
  std::cout << "reports written to " << c.out_dir.string() << "\n";
  if (!report.failures.empty()) {
    for (const auto& fl : report.failures) {
      std::cerr << "failed: " << fl.method << " [" << fl.attribute << "] during "
                << fl.stage << ": " << fl.message << "\n";
    }
    return fairscl::ExitCodeFor(report.failures.front().kind);
  }
  return 0;
}

int Report(const Flags& f) {
  if (f.out.empty()) throw Error(ErrorKind::kConfig, "report needs --out DIR");
  const std::filesystem::path dir = f.out;
  const fairscl::ExperimentReport report =
      fairscl::ReportFromJson(fairscl::ReadTextFile(dir / "report.json"));
  std::vector<fairscl::ReportFormat> formats = {fairscl::ReportFormat::kMarkdown,
                                                fairscl::ReportFormat::kDelimited};
  if (!f.format.empty()) {
    formats.clear();
    for (const auto& n : SplitList(f.format)) formats.push_back(fairscl::ParseFormat(n));
  }
  for (const auto& name : fairscl::WriteReports(report, dir, formats)) {
    std::cout << "wrote " << (dir / name).string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-aware contrastive learning and subgroup fairness evaluation"};
  app.require_subcommand(1);
  Flags f;

  CLI::App* generate = app.add_subcommand("generate", "Write a synthetic dataset");
  AddCommon(generate, f);

  CLI::App* train = app.add_subcommand("train", "Train methods on a table");
  AddCommon(train, f);
  train->add_option("--data", f.data, "Training table (CSV)");
  train->add_option("--methods", f.methods, "Comma-separated methods");
  train->add_option("--attribute", f.attribute, "Group attribute");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a table");
  AddCommon(evaluate, f);
  evaluate->add_option("--data", f.data, "Table to score (CSV)");
  evaluate->add_option("--checkpoint", f.checkpoint, "Model checkpoint");
  evaluate->add_option("--attribute", f.attribute, "Comma-separated attributes");
  evaluate->add_option("--bootstrap", f.bootstrap, "Bootstrap replicates");
  evaluate->add_option("--threshold", f.threshold, "TPR/FPR threshold");

  CLI::App* run = app.add_subcommand("run", "Run the full evaluation protocol");
  AddCommon(run, f);
  run->add_option("--data", f.data, "Input table (CSV); synthetic when omitted");
  run->add_option("--test-data", f.test_data, "Held-out table (CSV)");
  run->add_option("--methods", f.methods, "Comma-separated methods");
  run->add_option("--attribute", f.attribute, "Comma-separated attributes");
  run->add_option("--bootstrap", f.bootstrap, "Bootstrap replicates");
  run->add_option("--format", f.format, "json,markdown,delimited");
  run->add_option("--threshold", f.threshold, "TPR/FPR threshold");

  CLI::App* report = app.add_subcommand("report", "Re-render reports from report.json");
  report->add_option("--out", f.out, "Directory holding report.json");
  report->add_option("--format", f.format, "markdown,delimited,json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fairscl::kExitConfig;
  }

  try {
    if (*generate) return Generate(f);
    if (*train) return Train(f);
    if (*evaluate) return Evaluate(f);
    if (*run) return Run(f);
    if (*report) return Report(f);
  } catch (const Error& e) {
    std::cerr << "error (" << fairscl::ErrorKindName(e.kind()) << "): " << e.what()
              << "\n";
    return fairscl::ExitCodeFor(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (io): " << e.what() << "\n";
    return fairscl::kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return fairscl::kExitInternal;
  }
  return fairscl::kExitInternal;
}
