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

#include "fairscl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_set>

#include "fairscl/error.hpp"
#include "fairscl/random.hpp"

namespace fairscl {

SubgroupView::SubgroupView(std::string attribute,
                           std::vector<std::string> categories,
                           std::vector<int> membership)
    : attribute_(std::move(attribute)),
      categories_(std::move(categories)),
      membership_(std::move(membership)) {
  const int k = static_cast<int>(categories_.size());
  for (int m : membership_) {
    if (m < 0 || m >= k) {
      throw Error(ErrorKind::kContract,
                  "subgroup membership index out of range for attribute '" +
                      attribute_ + "'");
    }
  }
}

SubgroupView SubgroupView::FromLabels(std::string attribute,
                                      std::span<const std::string> per_record) {
  std::set<std::string> unique(per_record.begin(), per_record.end());
  std::vector<std::string> categories(unique.begin(), unique.end());
  std::vector<int> membership;
  membership.reserve(per_record.size());
  for (const auto& c : per_record) {
    membership.push_back(static_cast<int>(
        std::lower_bound(categories.begin(), categories.end(), c) -
        categories.begin()));
  }
  return SubgroupView(std::move(attribute), std::move(categories),
                      std::move(membership));
}

int SubgroupView::CategoryIndex(std::string_view category) const {
  auto it = std::find(categories_.begin(), categories_.end(), category);
  if (it == categories_.end()) {
    throw Error(ErrorKind::kConfig, "attribute '" + attribute_ +
                                        "' has no category '" +
                                        std::string(category) + "'");
  }
  return static_cast<int>(it - categories_.begin());
}

std::vector<bool> SubgroupView::Mask(std::string_view category) const {
  const int k = CategoryIndex(category);
  std::vector<bool> mask(membership_.size());
  for (size_t i = 0; i < membership_.size(); ++i) mask[i] = membership_[i] == k;
  return mask;
}

SubgroupView SubgroupView::Subset(std::span<const size_t> indices) const {
  std::vector<int> membership;
  membership.reserve(indices.size());
  for (size_t i : indices) membership.push_back(membership_.at(i));
  SubgroupView out;
  out.attribute_ = attribute_;
  out.categories_ = categories_;
  out.membership_ = std::move(membership);
  return out;
}

Dataset Dataset::Create(std::vector<Record> records,
                        std::vector<std::string> feature_names) {
  if (feature_names.empty()) {
    if (records.empty()) {
      throw Error(ErrorKind::kValidation,
                  "empty dataset needs explicit feature names");
    }
    for (size_t k = 0; k < records.front().features.size(); ++k) {
      feature_names.push_back("f" + std::to_string(k));
    }
  }
  const size_t d = feature_names.size();
  if (d == 0) {
    throw Error(ErrorKind::kValidation, "dataset needs at least one feature");
  }

  std::unordered_set<std::string> ids;
  ids.reserve(records.size());
  std::map<std::string, std::set<std::string>> categories;
  for (size_t r = 0; r < records.size(); ++r) {
    const Record& rec = records[r];
    const std::string where = "record " + std::to_string(r) + " (id '" +
                              rec.id + "')";
    if (!ids.insert(rec.id).second) {
      throw Error(ErrorKind::kValidation, "duplicate id '" + rec.id + "'");
    }
    if (rec.label != 0 && rec.label != 1) {
      throw Error(ErrorKind::kValidation, where + ": label must be 0 or 1");
    }
    if (rec.features.size() != d) {
      throw Error(ErrorKind::kValidation,
                  where + ": expected " + std::to_string(d) + " features, got " +
                      std::to_string(rec.features.size()));
    }
    for (double v : rec.features) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kValidation, where + ": non-finite feature");
      }
    }
    if (r > 0) {
      const auto& first = records.front().groups;
      bool same = first.size() == rec.groups.size() &&
                  std::equal(first.begin(), first.end(), rec.groups.begin(),
                             [](const auto& a, const auto& b) {
                               return a.first == b.first;
                             });
      if (!same) {
        throw Error(ErrorKind::kValidation,
                    where + ": attribute names differ from record 0");
      }
    }
    for (const auto& [name, value] : rec.groups) {
      if (value.empty()) {
        throw Error(ErrorKind::kValidation,
                    where + ": missing value for attribute '" + name + "'");
      }
      categories[name].insert(value);
    }
  }

  Dataset ds;
  ds.feature_names_ = std::move(feature_names);
  ds.records_ = std::move(records);
  for (auto& [name, values] : categories) {
    ds.attributes_.push_back(
        AttributeInfo{name, std::vector<std::string>(values.begin(),
                                                     values.end())});
  }
  ds.features_.resize(static_cast<Eigen::Index>(ds.records_.size()),
                      static_cast<Eigen::Index>(d));
  ds.labels_.reserve(ds.records_.size());
  for (size_t r = 0; r < ds.records_.size(); ++r) {
    for (size_t k = 0; k < d; ++k) {
      ds.features_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) =
          ds.records_[r].features[k];
    }
    ds.labels_.push_back(ds.records_[r].label);
  }
  return ds;
}

const AttributeInfo& Dataset::attribute(std::string_view name) const {
  for (const auto& a : attributes_) {
    if (a.name == name) return a;
  }
  throw Error(ErrorKind::kConfig,
              "dataset has no attribute '" + std::string(name) + "'");
}

SubgroupView Dataset::View(std::string_view attribute_name) const {
  const AttributeInfo& info = attribute(attribute_name);
  std::vector<int> membership;
  membership.reserve(records_.size());
  for (const Record& rec : records_) {
    const std::string& value = rec.groups.at(info.name);
    membership.push_back(static_cast<int>(
        std::lower_bound(info.categories.begin(), info.categories.end(),
                         value) -
        info.categories.begin()));
  }
  return SubgroupView(info.name, info.categories, std::move(membership));
}

Dataset Dataset::Subset(std::span<const size_t> indices) const {
  std::vector<Record> out;
  out.reserve(indices.size());
  for (size_t i : indices) out.push_back(records_.at(i));
  return Create(std::move(out), feature_names_);
}

Dataset BalancedResample(const Dataset& dataset, std::string_view attribute,
                         uint64_t seed) {
  const AttributeInfo& info = dataset.attribute(attribute);
  if (!info.usable()) {
    throw Error(ErrorKind::kConfig, "attribute '" + info.name +
                                        "' has a single category; cannot "
                                        "balance");
  }
  const SubgroupView view = dataset.View(info.name);
  std::vector<std::vector<size_t>> members(info.categories.size());
  for (size_t i = 0; i < view.size(); ++i) {
    members[static_cast<size_t>(view.membership()[i])].push_back(i);
  }
  size_t target = 0;
  for (const auto& m : members) target = std::max(target, m.size());

  std::vector<Record> records = dataset.records();
  std::unordered_set<std::string> ids;
  for (const Record& r : records) ids.insert(r.id);

  RandomEngine rng(DeriveSeed(seed, "balanced_resample"));
  for (const auto& m : members) {
    if (m.size() == target) continue;
    std::uniform_int_distribution<size_t> pick(0, m.size() - 1);
    for (size_t k = 0; k < target - m.size(); ++k) {
      Record copy = dataset.records()[m[pick(rng)]];
      copy.id += std::string(kResampleIdSeparator) + std::to_string(k);
      if (!ids.insert(copy.id).second) {
        throw Error(ErrorKind::kValidation,
                    "resampled id '" + copy.id + "' collides with an existing id");
      }
      records.push_back(std::move(copy));
    }
  }
  return Dataset::Create(std::move(records), dataset.feature_names());
}

std::pair<Dataset, Dataset> Split(const Dataset& dataset, double test_fraction,
                                  uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::kConfig, "test fraction must lie in (0, 1)");
  }
  const size_t n = dataset.size();
  const auto n_test = static_cast<size_t>(
      std::llround(static_cast<double>(n) * test_fraction));
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  RandomEngine rng(DeriveSeed(seed, "split"));
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<size_t> test(order.begin(), order.begin() + n_test);
  std::vector<size_t> train(order.begin() + n_test, order.end());
  // Keep the original record order inside each side.
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {dataset.Subset(train), dataset.Subset(test)};
}

}  // namespace fairscl
