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

// End-to-end evaluation: split, train every method, score the test set and
// attach bootstrap CIs computed on resample indices shared by all methods.

#ifndef FAIRSCL_EXPERIMENT_HPP_
#define FAIRSCL_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fairscl/dataset.hpp"
#include "fairscl/error.hpp"
#include "fairscl/metrics.hpp"
#include "fairscl/stats.hpp"
#include "fairscl/train.hpp"

namespace fairscl {

enum class Method { kErm, kBalanced, kAdv, kScl, kProposed };

std::string_view MethodName(Method method);
// Throws kConfig on an unknown name.
Method ParseMethod(std::string_view name);

enum class ReportFormat { kJson, kMarkdown, kDelimited };

std::string_view FormatName(ReportFormat format);
ReportFormat ParseFormat(std::string_view name);

struct DataSource {
  // Table to ingest; synthetic data is generated when unset.
  std::optional<std::filesystem::path> path;
  // Held-out table; the data is split when unset.
  std::optional<std::filesystem::path> test_path;
  // Explicit column roles; conventional roles when unset.
  std::optional<TableSchema> schema;
  SyntheticConfig synthetic;
};

struct ExperimentConfig {
  DataSource data;
  std::vector<std::string> attributes = {"group"};
  std::vector<Method> methods = {Method::kErm, Method::kBalanced, Method::kAdv,
                                 Method::kScl, Method::kProposed};
  std::string train_preset = "desk";  // "desk" or "paper"
  TrainConfig train = TrainConfig::Desk();
  size_t bootstrap = kDefaultBootstrapReplicates;
  uint64_t seed = 0;
  std::filesystem::path out_dir = "fairscl_out";
  std::vector<ReportFormat> formats = {ReportFormat::kJson,
                                       ReportFormat::kMarkdown,
                                       ReportFormat::kDelimited};
  double test_fraction = 0.2;
  double threshold = kDefaultThreshold;

  // Throws kConfig on an empty method or attribute list, duplicate entries,
  // B < 2 or an invalid train config.
  void Validate() const;
};

// Parses a JSON config document; unknown keys are rejected with kConfig.
// Fields absent from the document keep their defaults; "train.preset"
// selects the base TrainConfig before the remaining train fields apply.
ExperimentConfig ParseExperimentConfig(std::string_view json_text);
ExperimentConfig LoadExperimentConfig(const std::filesystem::path& path);
// Canonical JSON form, used for the provenance hash.
std::string ExperimentConfigToJson(const ExperimentConfig& config);

struct MetricEstimate {
  std::string metric;  // "overall_auc", "mauc:<category>" or "delta_mauc"
  BootstrapResult boot;
  bool encloses_point() const {
    return boot.ci_low <= boot.point && boot.point <= boot.ci_high;
  }
};

struct MethodResult {
  Method method = Method::kErm;
  std::string attribute;
  FairnessReport fairness;
  std::vector<MetricEstimate> estimates;
  size_t anchors_used = 0;
  size_t anchors_dropped = 0;
  uint64_t resample_digest = 0;  // hash of every replicate's indices
  uint64_t train_seed = 0;
  std::string checkpoint;  // path relative to the output directory
  std::vector<std::string> warnings;

  const MetricEstimate& Estimate(std::string_view metric) const;
};

struct TTestRow {
  std::string attribute;  // kPooledAttribute for the pooled test
  Method baseline = Method::kErm;
  TTestResult result;
};

inline constexpr std::string_view kPooledAttribute = "pooled";

struct ChangeRow {
  std::string attribute;
  Method baseline = Method::kErm;
  std::string metric;
  double baseline_value = 0.0;
  double proposed_value = 0.0;
  RelativeChange change;
};

struct Failure {
  std::string method;
  std::string attribute;
  std::string stage;
  ErrorKind kind = ErrorKind::kContract;
  std::string message;
};

struct ExperimentReport {
  ExperimentConfig config;
  uint64_t config_hash = 0;
  std::string timestamp;
  size_t train_size = 0;
  size_t test_size = 0;
  std::vector<MethodResult> results;  // config order: attribute, then method
  std::vector<TTestRow> ttests;
  std::vector<ChangeRow> changes;
  std::vector<Failure> failures;
  std::map<std::string, size_t> redraws;  // per attribute

  const MethodResult* Find(Method method, std::string_view attribute) const;
};

inline constexpr int kReportSchemaVersion = 1;

// Runs the whole protocol and writes the requested reports, dataset.csv,
// checkpoints/ and manifest.json under config.out_dir. Errors confined to one
// (method, attribute) are recorded as failures and the run continues. Throws
// kIo before any training when the output directory is not writable.
ExperimentReport RunExperiment(const ExperimentConfig& config);

// Report serialization.
std::string ReportToJson(const ExperimentReport& report);
ExperimentReport ReportFromJson(std::string_view json_text);
std::string RenderMarkdown(const ExperimentReport& report);
std::string RenderDelimited(const ExperimentReport& report);

// "0.0116 (0.0110-0.0123)".
std::string FormatCell(double point, double low, double high);

// Writes `report` in each of `formats` to out_dir/report.{json,md,csv}.
// Returns the written file names.
std::vector<std::string> WriteReports(const ExperimentReport& report,
                                      const std::filesystem::path& out_dir,
                                      const std::vector<ReportFormat>& formats);

// Writes `contents` to `path`, throwing kIo on failure.
void WriteTextFile(const std::filesystem::path& path, std::string_view contents);
std::string ReadTextFile(const std::filesystem::path& path);

// Resolves the train preset name to its TrainConfig.
TrainConfig TrainPreset(std::string_view name);

// Train / test data as RunExperiment would see it.
std::pair<Dataset, Dataset> LoadExperimentData(const ExperimentConfig& config);

// Trains `method` for `attribute` (the attribute is ignored by ERM).
TrainResult TrainMethod(Method method, const Dataset& train,
                        const TrainConfig& config);

}  // namespace fairscl

#endif  // FAIRSCL_EXPERIMENT_HPP_
