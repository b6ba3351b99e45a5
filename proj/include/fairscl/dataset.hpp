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

// Tabular records with binary labels and categorical subgroup attributes.
//
// A Dataset is validated once at construction and never mutated afterwards;
// resampling and splitting return new datasets. Attribute categories are kept
// in sorted order everywhere so that subgroup indices are stable across runs.

#ifndef FAIRSCL_DATASET_HPP_
#define FAIRSCL_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace fairscl {

struct Record {
  std::string id;
  std::vector<double> features;
  int label = 0;
  // Attribute name -> category, e.g. {"sex": "F", "age": "<75"}.
  std::map<std::string, std::string> groups;

  bool operator==(const Record&) const = default;
};

struct AttributeInfo {
  std::string name;
  std::vector<std::string> categories;  // sorted

  // An attribute with a single category cannot be used for fairness metrics.
  bool usable() const { return categories.size() >= 2; }
};

// Category membership of every record for one attribute. The per-category
// masks partition the records.
class SubgroupView {
 public:
  SubgroupView() = default;
  SubgroupView(std::string attribute, std::vector<std::string> categories,
               std::vector<int> membership);

  // Builds the view from one category label per record (categories sorted).
  static SubgroupView FromLabels(std::string attribute,
                                 std::span<const std::string> per_record);

  const std::string& attribute() const { return attribute_; }
  const std::vector<std::string>& categories() const { return categories_; }
  // Category index of every record.
  std::span<const int> membership() const { return membership_; }
  size_t size() const { return membership_.size(); }
  size_t num_categories() const { return categories_.size(); }

  int CategoryIndex(std::string_view category) const;
  std::vector<bool> Mask(std::string_view category) const;
  SubgroupView Subset(std::span<const size_t> indices) const;

 private:
  std::string attribute_;
  std::vector<std::string> categories_;
  std::vector<int> membership_;
};

class Dataset {
 public:
  // Validates and builds a dataset. Feature names default to f0..f{d-1}.
  // Throws Error(kValidation) on any violated invariant.
  static Dataset Create(std::vector<Record> records,
                        std::vector<std::string> feature_names = {});

  size_t size() const { return records_.size(); }
  size_t feature_dim() const { return feature_names_.size(); }
  const std::vector<Record>& records() const { return records_; }
  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const std::vector<AttributeInfo>& attributes() const { return attributes_; }
  // Throws Error(kConfig) for an unknown attribute name.
  const AttributeInfo& attribute(std::string_view name) const;

  // Row-major n x d feature matrix and the label vector, aligned with
  // records().
  const Eigen::MatrixXd& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }

  SubgroupView View(std::string_view attribute) const;

  // Records at `indices`, in that order. Indices may repeat only if the
  // caller renames ids; see BalancedResample.
  Dataset Subset(std::span<const size_t> indices) const;

  bool operator==(const Dataset& other) const {
    return feature_names_ == other.feature_names_ && records_ == other.records_;
  }

 private:
  Dataset() = default;

  std::vector<Record> records_;
  std::vector<std::string> feature_names_;
  std::vector<AttributeInfo> attributes_;
  Eigen::MatrixXd features_;
  std::vector<int> labels_;
};

// Column roles of a delimited table.
struct TableSchema {
  std::string id_column = "id";
  std::string label_column = "label";
  std::vector<std::string> group_columns;
  std::vector<std::string> feature_columns;

  // The layout written by EmitTable: "id", "label", feature columns named
  // f<k>, every other column a group attribute.
  static TableSchema Conventional(const std::vector<std::string>& header);
};

// Reads a comma-separated table with a header row. Row order is preserved.
Dataset IngestTable(const std::filesystem::path& path,
                    const TableSchema& schema);
// Same, with TableSchema::Conventional applied to the header.
Dataset IngestTable(const std::filesystem::path& path);

// Writes id, label, groups (sorted by attribute name), then features, with
// 17 significant digits so that IngestTable(EmitTable(ds)) == ds.
void EmitTable(const Dataset& dataset, const std::filesystem::path& path);

struct SyntheticConfig {
  size_t n = 5000;
  size_t feature_dim = 16;
  std::string attribute = "group";
  std::vector<std::string> categories = {"A", "B"};
  std::vector<double> proportions = {0.5, 0.5};
  // P(label = 1) within each category.
  std::vector<double> prevalence = {0.3, 0.6};
  // Mean shift of +/- signal_strength applied to the first signal_dims
  // features according to the label.
  double signal_strength = 0.4;
  size_t signal_dims = 4;
  // Feature `signal_dims` is shifted by -nuisance_strength in the first
  // category and +nuisance_strength in the second. Combined with unequal
  // prevalence it gives a model a group shortcut.
  double nuisance_strength = 2.0;
};

// Deterministic for a fixed (config, seed).
Dataset GenerateSynthetic(const SyntheticConfig& config, uint64_t seed);

// Upsamples every category of `attribute` with replacement to the size of the
// largest one. All original records are kept in their original order and the
// copies are appended; a copy of record "x" gets the id "x~r<k>".
Dataset BalancedResample(const Dataset& dataset, std::string_view attribute,
                         uint64_t seed);

// Id suffix separator used for resampled copies.
inline constexpr std::string_view kResampleIdSeparator = "~r";

// Random record-level split; returns (train, test) with
// |test| = round(n * test_fraction).
std::pair<Dataset, Dataset> Split(const Dataset& dataset, double test_fraction,
                                  uint64_t seed);

}  // namespace fairscl

#endif  // FAIRSCL_DATASET_HPP_
