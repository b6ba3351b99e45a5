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

// Performance and subgroup fairness metrics over scored predictions.
//
// AUC-type metrics count ties as one half (Mann-Whitney convention). The
// marginal AUC of a category compares the category's positives against the
// negatives of the *whole* set; TPR, FPR and Brier score are computed on the
// category's own records. Every delta is max - min across categories.

#ifndef FAIRSCL_METRICS_HPP_
#define FAIRSCL_METRICS_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairscl/dataset.hpp"

namespace fairscl {

// Model scores aligned with binary labels and, optionally, subgroup
// membership. Scores must be finite; higher means more positive.
class ScoredSet {
 public:
  ScoredSet(std::vector<double> scores, std::vector<int> labels,
            std::optional<SubgroupView> view = std::nullopt);

  size_t size() const { return scores_.size(); }
  std::span<const double> scores() const { return scores_; }
  std::span<const int> labels() const { return labels_; }
  bool has_view() const { return view_.has_value(); }
  // Throws Error(kContract) when the set carries no subgroup view.
  const SubgroupView& view() const;

  // Joint resample of scores, labels and membership.
  ScoredSet Subset(std::span<const size_t> indices) const;

 private:
  std::vector<double> scores_;
  std::vector<int> labels_;
  std::optional<SubgroupView> view_;
};

// P(score_pos > score_neg) + 0.5 P(tie). Throws kUndefinedMetric without
// both classes.
double Auc(const ScoredSet& set);

// Positives of `category` against all negatives. Throws kUndefinedMetric when
// the category has no positive or the set no negative.
double MarginalAuc(const ScoredSet& set, std::string_view category);

// Marginal AUC of every category, in view().categories() order.
std::vector<double> MarginalAucs(const ScoredSet& set);

double MaxMinGap(std::span<const double> values);

struct GroupMetrics {
  double mauc = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double bs = 0.0;
  size_t n_pos = 0;
  size_t n_total = 0;
};

struct FairnessDeltas {
  double d_mauc = 0.0;
  double d_tpr = 0.0;
  double d_fpr = 0.0;
  double d_bs = 0.0;
};

struct FairnessReport {
  std::string attribute;
  double overall_auc = 0.0;
  std::map<std::string, GroupMetrics> per_group;
  FairnessDeltas deltas;
  double threshold = 0.5;
};

inline constexpr double kDefaultThreshold = 0.5;

// Scores must be probabilities in [0, 1]; a record is predicted positive iff
// score >= threshold. Throws kUndefinedMetric naming the category and metric
// when a category lacks positives (mAUC, TPR) or negatives (FPR).
FairnessReport ComputeFairnessReport(const ScoredSet& set,
                                     double threshold = kDefaultThreshold);

struct RelativeChange {
  double absolute = 0.0;
  std::optional<double> relative_pct;  // empty when the baseline is 0

  // Throws kUndefinedMetric when the baseline was 0.
  double relative_pct_or_throw() const;
};

// absolute = proposed - baseline; relative_pct = 100 * absolute / baseline.
RelativeChange ComputeRelativeChange(double baseline, double proposed);

}  // namespace fairscl

#endif  // FAIRSCL_METRICS_HPP_
