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

#include "fairscl/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>

#include "fairscl/checkpoint.hpp"
#include "fairscl/random.hpp"
#include "json.hpp"

namespace fairscl {
namespace {

using nlohmann::json;

constexpr Method kAllMethods[] = {Method::kErm, Method::kBalanced, Method::kAdv,
                                  Method::kScl, Method::kProposed};

[[noreturn]] void ConfigError(const std::string& msg) {
  throw Error(ErrorKind::kConfig, "config: " + msg);
}

void CheckKeys(const json& obj, std::initializer_list<std::string_view> allowed,
               const std::string& where) {
  if (!obj.is_object()) ConfigError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      ConfigError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
void Read(const json& obj, const char* key, T* out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    *out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    ConfigError("bad value for '" + std::string(key) + "' in " + where);
  }
}

SyntheticConfig ParseSynthetic(const json& j) {
  CheckKeys(j,
            {"n", "feature_dim", "attribute", "categories", "proportions",
             "prevalence", "signal_strength", "signal_dims", "nuisance_strength"},
            "data.synthetic");
  SyntheticConfig c;
  const std::string w = "data.synthetic";
  Read(j, "n", &c.n, w);
  Read(j, "feature_dim", &c.feature_dim, w);
  Read(j, "attribute", &c.attribute, w);
  Read(j, "categories", &c.categories, w);
  Read(j, "proportions", &c.proportions, w);
  Read(j, "prevalence", &c.prevalence, w);
  Read(j, "signal_strength", &c.signal_strength, w);
  Read(j, "signal_dims", &c.signal_dims, w);
  Read(j, "nuisance_strength", &c.nuisance_strength, w);
  return c;
}

json SyntheticToJson(const SyntheticConfig& c) {
  return json{{"n", c.n},
              {"feature_dim", c.feature_dim},
              {"attribute", c.attribute},
              {"categories", c.categories},
              {"proportions", c.proportions},
              {"prevalence", c.prevalence},
              {"signal_strength", c.signal_strength},
              {"signal_dims", c.signal_dims},
              {"nuisance_strength", c.nuisance_strength}};
}

TrainConfig ParseTrain(const json& j, std::string* preset) {
  CheckKeys(j,
            {"preset", "pretrain_epochs", "finetune_epochs", "learning_rate",
             "finetune_learning_rate", "temperature", "batch_size",
             "adversary_weight", "encoder_widths", "embed_dim", "loss_form"},
            "train");
  const std::string w = "train";
  Read(j, "preset", preset, w);
  TrainConfig c = TrainPreset(*preset);
  Read(j, "pretrain_epochs", &c.pretrain_epochs, w);
  Read(j, "finetune_epochs", &c.finetune_epochs, w);
  Read(j, "learning_rate", &c.learning_rate, w);
  if (j.contains("finetune_learning_rate")) {
    if (j["finetune_learning_rate"].is_null()) {
      c.finetune_learning_rate.reset();
    } else {
      double v = 0.0;
      Read(j, "finetune_learning_rate", &v, w);
      c.finetune_learning_rate = v;
    }
  }
  Read(j, "temperature", &c.temperature, w);
  Read(j, "batch_size", &c.batch_size, w);
  Read(j, "adversary_weight", &c.adversary_weight, w);
  Read(j, "encoder_widths", &c.encoder_widths, w);
  Read(j, "embed_dim", &c.embed_dim, w);
  if (j.contains("loss_form")) {
    std::string form;
    Read(j, "loss_form", &form, w);
    if (form == "log") {
      c.loss_form = LossForm::kLog;
    } else if (form == "literal") {
      c.loss_form = LossForm::kLiteral;
    } else {
      ConfigError("train.loss_form must be 'log' or 'literal'");
    }
  }
  return c;
}

json TrainToJson(const TrainConfig& c, const std::string& preset) {
  json j{{"preset", preset},
         {"pretrain_epochs", c.pretrain_epochs},
         {"finetune_epochs", c.finetune_epochs},
         {"learning_rate", c.learning_rate},
         {"temperature", c.temperature},
         {"batch_size", c.batch_size},
         {"adversary_weight", c.adversary_weight},
         {"encoder_widths", c.encoder_widths},
         {"embed_dim", c.embed_dim},
         {"loss_form", c.loss_form == LossForm::kLog ? "log" : "literal"}};
  j["finetune_learning_rate"] =
      c.finetune_learning_rate ? json(*c.finetune_learning_rate) : json(nullptr);
  return j;
}

std::string Hex(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string UtcTimestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void PrepareOutputDir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "checkpoints", ec);
  if (ec) {
    throw Error(ErrorKind::kIo, "cannot create output directory '" +
                                    dir.string() + "': " + ec.message());
  }
  const std::filesystem::path probe = dir / ".write_probe";
  {
    std::ofstream out(probe, std::ios::trunc);
    out << "probe";
    if (!out) {
      throw Error(ErrorKind::kIo,
                  "output directory '" + dir.string() + "' is not writable");
    }
  }
  std::filesystem::remove(probe, ec);
}

struct LoadedData {
  Dataset full;
  Dataset train;
  Dataset test;
};

LoadedData LoadData(const ExperimentConfig& config) {
  const DataSource& src = config.data;
  auto ingest = [&](const std::filesystem::path& p) {
    return src.schema ? IngestTable(p, *src.schema) : IngestTable(p);
  };
  Dataset full = src.path ? ingest(*src.path)
                          : GenerateSynthetic(src.synthetic, config.seed);
  if (src.test_path) {
    Dataset test = ingest(*src.test_path);
    if (test.feature_names() != full.feature_names()) {
      throw Error(ErrorKind::kSchema,
                  "test table features differ from the training table");
    }
    Dataset train = full;
    return {std::move(full), std::move(train), std::move(test)};
  }
  auto [train, test] = Split(full, config.test_fraction, config.seed);
  return {std::move(full), std::move(train), std::move(test)};
}

std::string CheckpointName(Method method, const std::string& attribute,
                           bool multi_attribute) {
  std::string name(MethodName(method));
  if (multi_attribute && method != Method::kErm) name += "-" + attribute;
  return "checkpoints/" + name + ".bin";
}

uint64_t PlanDigest(const ResamplePlan& plan) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t b = 0; b < plan.replicates(); ++b) {
    const std::string hex = Hex(plan.IndexHash(b));
    h = Fnv1a64(hex, h);
  }
  return h;
}

double PlanMetric(const ScoredSet& s) {
  Auc(s);
  const std::vector<double> m = MarginalAucs(s);
  return MaxMinGap(m);
}

}  // namespace

std::string_view MethodName(Method method) {
  switch (method) {
    case Method::kErm: return "erm";
    case Method::kBalanced: return "balanced";
    case Method::kAdv: return "adv";
    case Method::kScl: return "scl";
    case Method::kProposed: return "proposed";
  }
  return "?";
}

Method ParseMethod(std::string_view name) {
  for (Method m : kAllMethods) {
    if (MethodName(m) == name) return m;
  }
  ConfigError("unknown method '" + std::string(name) +
              "' (expected erm, balanced, adv, scl or proposed)");
}

std::string_view FormatName(ReportFormat format) {
  switch (format) {
    case ReportFormat::kJson: return "json";
    case ReportFormat::kMarkdown: return "markdown";
    case ReportFormat::kDelimited: return "delimited";
  }
  return "?";
}

ReportFormat ParseFormat(std::string_view name) {
  for (ReportFormat f :
       {ReportFormat::kJson, ReportFormat::kMarkdown, ReportFormat::kDelimited}) {
    if (FormatName(f) == name) return f;
  }
  ConfigError("unknown report format '" + std::string(name) +
              "' (expected json, markdown or delimited)");
}

TrainConfig TrainPreset(std::string_view name) {
  if (name == "desk") return TrainConfig::Desk();
  if (name == "paper") return TrainConfig{};
  ConfigError("unknown train preset '" + std::string(name) +
              "' (expected desk or paper)");
}

void ExperimentConfig::Validate() const {
  if (methods.empty()) ConfigError("at least one method is required");
  if (attributes.empty()) ConfigError("at least one attribute is required");
  if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size()) {
    ConfigError("methods contain duplicates");
  }
  if (std::set<std::string>(attributes.begin(), attributes.end()).size() !=
      attributes.size()) {
    ConfigError("attributes contain duplicates");
  }
  if (bootstrap < 2) ConfigError("bootstrap B must be at least 2");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    ConfigError("test_fraction must lie in (0, 1)");
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    ConfigError("threshold must lie in [0, 1]");
  }
  if (formats.empty()) ConfigError("at least one report format is required");
  if (out_dir.empty()) ConfigError("output directory is empty");
  TrainConfig probe = train;
  for (const auto& a : attributes) {
    probe.attribute = a;
    probe.Validate();
  }
}

ExperimentConfig ParseExperimentConfig(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    ConfigError(std::string("invalid JSON: ") + e.what());
  }
  CheckKeys(j,
            {"data", "attributes", "methods", "train", "bootstrap", "seed", "out",
             "formats", "test_fraction", "threshold"},
            "config");
  ExperimentConfig c;
  const std::string w = "config";
  if (j.contains("data")) {
    const json& d = j["data"];
    CheckKeys(d, {"path", "test_path", "schema", "synthetic"}, "data");
    if (d.contains("path") && !d["path"].is_null()) {
      c.data.path = d["path"].get<std::string>();
    }
    if (d.contains("test_path") && !d["test_path"].is_null()) {
      c.data.test_path = d["test_path"].get<std::string>();
    }
    if (d.contains("schema") && !d["schema"].is_null()) {
      const json& s = d["schema"];
      CheckKeys(s, {"id_column", "label_column", "group_columns", "feature_columns"},
                "data.schema");
      TableSchema schema;
      Read(s, "id_column", &schema.id_column, "data.schema");
      Read(s, "label_column", &schema.label_column, "data.schema");
      Read(s, "group_columns", &schema.group_columns, "data.schema");
      Read(s, "feature_columns", &schema.feature_columns, "data.schema");
      c.data.schema = schema;
    }
    if (d.contains("synthetic")) c.data.synthetic = ParseSynthetic(d["synthetic"]);
  }
  Read(j, "attributes", &c.attributes, w);
  if (j.contains("methods")) {
    std::vector<std::string> names;
    Read(j, "methods", &names, w);
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(ParseMethod(n));
  }
  if (j.contains("train")) c.train = ParseTrain(j["train"], &c.train_preset);
  Read(j, "bootstrap", &c.bootstrap, w);
  Read(j, "seed", &c.seed, w);
  if (j.contains("out")) {
    std::string out;
    Read(j, "out", &out, w);
    c.out_dir = out;
  }
  if (j.contains("formats")) {
    std::vector<std::string> names;
    Read(j, "formats", &names, w);
    c.formats.clear();
    for (const auto& n : names) c.formats.push_back(ParseFormat(n));
  }
  Read(j, "test_fraction", &c.test_fraction, w);
  Read(j, "threshold", &c.threshold, w);
  return c;
}

ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kConfig, "cannot read config '" + path.string() + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseExperimentConfig(ss.str());
}

std::string ExperimentConfigToJson(const ExperimentConfig& c) {
  json data{{"synthetic", SyntheticToJson(c.data.synthetic)}};
  data["path"] = c.data.path ? json(c.data.path->string()) : json(nullptr);
  data["test_path"] =
      c.data.test_path ? json(c.data.test_path->string()) : json(nullptr);
  if (c.data.schema) {
    data["schema"] = json{{"id_column", c.data.schema->id_column},
                          {"label_column", c.data.schema->label_column},
                          {"group_columns", c.data.schema->group_columns},
                          {"feature_columns", c.data.schema->feature_columns}};
  } else {
    data["schema"] = nullptr;
  }
  std::vector<std::string> methods, formats;
  for (Method m : c.methods) methods.emplace_back(MethodName(m));
  for (ReportFormat f : c.formats) formats.emplace_back(FormatName(f));
  json j{{"data", data},
         {"attributes", c.attributes},
         {"methods", methods},
         {"train", TrainToJson(c.train, c.train_preset)},
         {"bootstrap", c.bootstrap},
         {"seed", c.seed},
         {"out", c.out_dir.string()},
         {"formats", formats},
         {"test_fraction", c.test_fraction},
         {"threshold", c.threshold}};
  return j.dump(2);
}

const MetricEstimate& MethodResult::Estimate(std::string_view metric) const {
  for (const auto& e : estimates) {
    if (e.metric == metric) return e;
  }
  throw Error(ErrorKind::kContract,
              "no estimate for metric '" + std::string(metric) + "'");
}

const MethodResult* ExperimentReport::Find(Method method,
                                           std::string_view attribute) const {
  for (const auto& r : results) {
    if (r.method == method && r.attribute == attribute) return &r;
  }
  return nullptr;
}

std::pair<Dataset, Dataset> LoadExperimentData(const ExperimentConfig& config) {
  LoadedData d = LoadData(config);
  return {std::move(d.train), std::move(d.test)};
}

TrainResult TrainMethod(Method method, const Dataset& train,
                        const TrainConfig& config) {
  switch (method) {
    case Method::kErm: return TrainErm(train, config);
    case Method::kBalanced: return TrainBalanced(train, config);
    case Method::kAdv: return TrainAdv(train, config);
    case Method::kScl: return TrainScl(train, config);
    case Method::kProposed: return TrainProposed(train, config);
  }
  throw Error(ErrorKind::kContract, "unknown method");
}

ExperimentReport RunExperiment(const ExperimentConfig& config) {
  config.Validate();
  PrepareOutputDir(config.out_dir);

  ExperimentReport report;
  report.config = config;
  report.config_hash = Fnv1a64(ExperimentConfigToJson(config));
  report.timestamp = UtcTimestamp();

  LoadedData data = LoadData(config);
  report.train_size = data.train.size();
  report.test_size = data.test.size();
  EmitTable(data.full, config.out_dir / "dataset.csv");

  const bool multi = config.attributes.size() > 1;
  const uint64_t train_seed = DeriveSeed(config.seed, "train");
  std::optional<TrainResult> erm_cache;
  std::vector<std::string> checkpoints;

  for (const std::string& attribute : config.attributes) {
    TrainConfig tc = config.train;
    tc.seed = train_seed;
    tc.attribute = attribute;

    std::vector<std::pair<size_t, ScoredSet>> scored;  // index into results
    for (Method method : config.methods) {
      std::string stage = "train";
      try {
        const bool cached = method == Method::kErm && erm_cache.has_value();
        if (method != Method::kErm || !cached) {
          // Attribute problems surface for every method, ERM included.
          data.train.View(attribute);
          data.test.View(attribute);
        }
        TrainResult trained =
            cached ? *erm_cache : TrainMethod(method, data.train, tc);
        if (method == Method::kErm && !cached) erm_cache = trained;

        MethodResult r;
        r.method = method;
        r.attribute = attribute;
        r.train_seed = train_seed;
        r.anchors_used = trained.log.anchors_used();
        r.anchors_dropped = trained.log.anchors_dropped();
        r.warnings = trained.log.warnings;
        r.checkpoint = CheckpointName(method, attribute, multi);
        stage = "checkpoint";
        if (std::find(checkpoints.begin(), checkpoints.end(), r.checkpoint) ==
            checkpoints.end()) {
          SaveCheckpoint(trained.state, config.out_dir / r.checkpoint);
          checkpoints.push_back(r.checkpoint);
        }
        stage = "evaluate";
        ScoredSet s = Predict(trained.state, data.test, attribute);
        r.fairness = ComputeFairnessReport(s, config.threshold);
        report.results.push_back(std::move(r));
        scored.emplace_back(report.results.size() - 1, std::move(s));
      } catch (const Error& e) {
        report.failures.push_back(Failure{std::string(MethodName(method)),
                                          attribute, stage, e.kind(), e.what()});
      }
    }
    if (scored.empty()) continue;

    const uint64_t boot_seed = DeriveSeed(config.seed, "bootstrap/" + attribute);
    std::optional<ResamplePlan> plan;
    try {
      plan = PlanResamples(PlanMetric, scored.front().second, config.bootstrap,
                           boot_seed);
      report.redraws[attribute] = plan->redraws;
    } catch (const Error& e) {
      for (auto& [idx, s] : scored) {
        report.failures.push_back(
            Failure{std::string(MethodName(report.results[idx].method)),
                    attribute, "bootstrap", e.kind(), e.what()});
      }
      report.results.erase(report.results.begin() +
                               static_cast<long>(scored.front().first),
                           report.results.end());
      continue;
    }
    const uint64_t digest = PlanDigest(*plan);
    for (auto& [idx, s] : scored) {
      MethodResult& r = report.results[idx];
      r.resample_digest = digest;
      const SubgroupView& view = s.view();
      r.estimates.push_back(
          {"overall_auc", EvaluatePlan(*plan, [](const ScoredSet& x) { return Auc(x); }, s)});
      for (size_t k = 0; k < view.num_categories(); ++k) {
        const std::string cat = view.categories()[k];
        r.estimates.push_back(
            {"mauc:" + cat,
             EvaluatePlan(*plan,
                          [cat](const ScoredSet& x) { return MarginalAuc(x, cat); },
                          s)});
      }
      r.estimates.push_back(
          {"delta_mauc",
           EvaluatePlan(*plan,
                        [](const ScoredSet& x) { return MaxMinGap(MarginalAucs(x)); },
                        s)});
    }

    const MethodResult* proposed = report.Find(Method::kProposed, attribute);
    if (!proposed) continue;
    for (Method base : config.methods) {
      if (base == Method::kProposed) continue;
      const MethodResult* b = report.Find(base, attribute);
      if (!b) continue;
      report.ttests.push_back(
          TTestRow{attribute, base,
                   PairedTTest(proposed->Estimate("delta_mauc").boot.replicates,
                               b->Estimate("delta_mauc").boot.replicates)});
      for (const MetricEstimate& e : proposed->estimates) {
        const double bv = b->Estimate(e.metric).boot.point;
        report.changes.push_back(ChangeRow{attribute, base, e.metric, bv,
                                           e.boot.point,
                                           ComputeRelativeChange(bv, e.boot.point)});
      }
    }
  }

  if (multi) {
    for (Method base : config.methods) {
      if (base == Method::kProposed) continue;
      std::vector<double> a, b;
      for (const std::string& attribute : config.attributes) {
        const MethodResult* p = report.Find(Method::kProposed, attribute);
        const MethodResult* q = report.Find(base, attribute);
        if (!p || !q) continue;
        const auto& pr = p->Estimate("delta_mauc").boot.replicates;
        const auto& qr = q->Estimate("delta_mauc").boot.replicates;
        a.insert(a.end(), pr.begin(), pr.end());
        b.insert(b.end(), qr.begin(), qr.end());
      }
      if (a.size() >= 2) {
        report.ttests.push_back(
            TTestRow{std::string(kPooledAttribute), base, PairedTTest(a, b)});
      }
    }
  }

  std::vector<std::string> files = WriteReports(report, config.out_dir, config.formats);
  files.insert(files.begin(), "dataset.csv");

  json manifest;
  manifest["schema_version"] = kReportSchemaVersion;
  manifest["status"] = report.failures.empty() ? "complete" : "partial";
  manifest["config_hash"] = Hex(report.config_hash);
  manifest["files"] = files;
  manifest["checkpoints"] = checkpoints;
  json failures = json::array();
  for (const Failure& f : report.failures) {
    failures.push_back(json{{"method", f.method},
                            {"attribute", f.attribute},
                            {"stage", f.stage},
                            {"kind", std::string(ErrorKindName(f.kind))},
                            {"message", f.message}});
  }
  manifest["failures"] = failures;
  WriteTextFile(config.out_dir / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

void WriteTextFile(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorKind::kIo, "cannot write '" + path.string() + "'");
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fairscl
