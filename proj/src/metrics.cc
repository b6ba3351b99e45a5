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

#include "fairscl/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "fairscl/error.hpp"

namespace fairscl {
namespace {

// Sum over positives of (#negatives below + 0.5 #negatives tied), with the
// negative scores pre-sorted. Integer and half-integer partial sums are exact
// in double, so the result equals the pairwise double loop bit for bit.
double PairWins(std::span<const double> sorted_negatives,
                std::span<const double> positives) {
  double wins = 0.0;
  for (double p : positives) {
    auto lo = std::lower_bound(sorted_negatives.begin(), sorted_negatives.end(), p);
    auto hi = std::upper_bound(lo, sorted_negatives.end(), p);
    wins += static_cast<double>(lo - sorted_negatives.begin()) +
            0.5 * static_cast<double>(hi - lo);
  }
  return wins;
}

std::vector<double> SortedNegatives(const ScoredSet& set) {
  std::vector<double> neg;
  for (size_t i = 0; i < set.size(); ++i) {
    if (set.labels()[i] == 0) neg.push_back(set.scores()[i]);
  }
  std::sort(neg.begin(), neg.end());
  return neg;
}

}  // namespace

ScoredSet::ScoredSet(std::vector<double> scores, std::vector<int> labels,
                     std::optional<SubgroupView> view)
    : scores_(std::move(scores)),
      labels_(std::move(labels)),
      view_(std::move(view)) {
  if (scores_.size() != labels_.size() ||
      (view_ && view_->size() != scores_.size())) {
    throw Error(ErrorKind::kShape,
                "scores, labels and subgroup masks must have equal length");
  }
  for (size_t i = 0; i < scores_.size(); ++i) {
    if (!std::isfinite(scores_[i])) {
      throw Error(ErrorKind::kContract,
                  "non-finite score at index " + std::to_string(i));
    }
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw Error(ErrorKind::kContract,
                  "non-binary label at index " + std::to_string(i));
    }
  }
}

const SubgroupView& ScoredSet::view() const {
  if (!view_) {
    throw Error(ErrorKind::kContract, "scored set carries no subgroup view");
  }
  return *view_;
}

ScoredSet ScoredSet::Subset(std::span<const size_t> indices) const {
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(indices.size());
  labels.reserve(indices.size());
  for (size_t i : indices) {
    scores.push_back(scores_.at(i));
    labels.push_back(labels_[i]);
  }
  std::optional<SubgroupView> view;
  if (view_) view = view_->Subset(indices);
  return ScoredSet(std::move(scores), std::move(labels), std::move(view));
}

double Auc(const ScoredSet& set) {
  const std::vector<double> neg = SortedNegatives(set);
  std::vector<double> pos;
  for (size_t i = 0; i < set.size(); ++i) {
    if (set.labels()[i] == 1) pos.push_back(set.scores()[i]);
  }
  if (pos.empty() || neg.empty()) {
    throw Error(ErrorKind::kUndefinedMetric,
                "AUC needs at least one positive and one negative label");
  }
  return PairWins(neg, pos) /
         (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

std::vector<double> MarginalAucs(const ScoredSet& set) {
  const SubgroupView& view = set.view();
  const std::vector<double> neg = SortedNegatives(set);
  if (neg.empty()) {
    throw Error(ErrorKind::kUndefinedMetric,
                "marginal AUC needs at least one negative label");
  }
  std::vector<std::vector<double>> pos(view.num_categories());
  for (size_t i = 0; i < set.size(); ++i) {
    if (set.labels()[i] == 1) {
      pos[static_cast<size_t>(view.membership()[i])].push_back(set.scores()[i]);
    }
  }
  std::vector<double> out;
  out.reserve(pos.size());
  for (size_t k = 0; k < pos.size(); ++k) {
    if (pos[k].empty()) {
      throw Error(ErrorKind::kUndefinedMetric,
                  "marginal AUC undefined: category '" + view.categories()[k] +
                      "' of attribute '" + view.attribute() +
                      "' has no positive");
    }
    out.push_back(PairWins(neg, pos[k]) /
                  (static_cast<double>(pos[k].size()) *
                   static_cast<double>(neg.size())));
  }
  return out;
}

double MarginalAuc(const ScoredSet& set, std::string_view category) {
  const SubgroupView& view = set.view();
  const int k = view.CategoryIndex(category);
  const std::vector<double> neg = SortedNegatives(set);
  std::vector<double> pos;
  for (size_t i = 0; i < set.size(); ++i) {
    if (set.labels()[i] == 1 && view.membership()[i] == k) {
      pos.push_back(set.scores()[i]);
    }
  }
  if (pos.empty()) {
    throw Error(ErrorKind::kUndefinedMetric,
                "marginal AUC undefined: category '" + std::string(category) +
                    "' has no positive");
  }
  if (neg.empty()) {
    throw Error(ErrorKind::kUndefinedMetric,
                "marginal AUC needs at least one negative label");
  }
  return PairWins(neg, pos) /
         (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

double MaxMinGap(std::span<const double> values) {
  if (values.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

FairnessReport ComputeFairnessReport(const ScoredSet& set, double threshold) {
  const SubgroupView& view = set.view();
  for (double s : set.scores()) {
    if (s < 0.0 || s > 1.0) {
      throw Error(ErrorKind::kContract,
                  "fairness report needs probability scores in [0, 1]");
    }
  }
  FairnessReport report;
  report.attribute = view.attribute();
  report.threshold = threshold;
  report.overall_auc = Auc(set);

  const size_t k_count = view.num_categories();
  std::vector<size_t> tp(k_count), pos(k_count), fp(k_count), neg(k_count);
  std::vector<double> sq(k_count);
  for (size_t i = 0; i < set.size(); ++i) {
    const auto k = static_cast<size_t>(view.membership()[i]);
    const double s = set.scores()[i];
    const int y = set.labels()[i];
    const bool predicted = s >= threshold;
    if (y == 1) {
      ++pos[k];
      tp[k] += predicted;
    } else {
      ++neg[k];
      fp[k] += predicted;
    }
    sq[k] += (s - y) * (s - y);
  }

  const std::vector<double> mauc = MarginalAucs(set);
  std::vector<double> tprs, fprs, bss;
  for (size_t k = 0; k < k_count; ++k) {
    const std::string& name = view.categories()[k];
    if (neg[k] == 0) {
      throw Error(ErrorKind::kUndefinedMetric,
                  "FPR undefined: category '" + name + "' of attribute '" +
                      view.attribute() + "' has no negative");
    }
    GroupMetrics g;
    g.mauc = mauc[k];
    g.tpr = static_cast<double>(tp[k]) / static_cast<double>(pos[k]);
    g.fpr = static_cast<double>(fp[k]) / static_cast<double>(neg[k]);
    g.n_pos = pos[k];
    g.n_total = pos[k] + neg[k];
    g.bs = sq[k] / static_cast<double>(g.n_total);
    tprs.push_back(g.tpr);
    fprs.push_back(g.fpr);
    bss.push_back(g.bs);
    report.per_group.emplace(name, g);
  }
  report.deltas.d_mauc = MaxMinGap(mauc);
  report.deltas.d_tpr = MaxMinGap(tprs);
  report.deltas.d_fpr = MaxMinGap(fprs);
  report.deltas.d_bs = MaxMinGap(bss);
  return report;
}

double RelativeChange::relative_pct_or_throw() const {
  if (!relative_pct) {
    throw Error(ErrorKind::kUndefinedMetric,
                "relative change undefined for a zero baseline");
  }
  return *relative_pct;
}

RelativeChange ComputeRelativeChange(double baseline, double proposed) {
  RelativeChange out;
  out.absolute = proposed - baseline;
  if (baseline != 0.0) out.relative_pct = 100.0 * out.absolute / baseline;
  return out;
}

}  // namespace fairscl
