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

#include "fairscl/contrastive.hpp"

#include <cmath>
#include <string>

#include "fairscl/error.hpp"

namespace fairscl {
namespace {

void CheckPairs(Eigen::Index batch_size, std::span<const PairIndex> pairs) {
  if (pairs.empty()) {
    throw Error(ErrorKind::kContract, "contrastive loss needs at least one anchor");
  }
  const auto n = static_cast<size_t>(batch_size);
  for (const PairIndex& a : pairs) {
    const std::string who = "anchor " + std::to_string(a.anchor);
    if (a.anchor >= n) {
      throw Error(ErrorKind::kContract, who + " lies outside the batch");
    }
    if (a.positives.empty()) {
      throw Error(ErrorKind::kContract, who + " has an empty positive set");
    }
    if (a.negatives.empty()) {
      throw Error(ErrorKind::kContract, who + " has an empty negative set");
    }
    for (const auto* set : {&a.positives, &a.negatives}) {
      for (size_t j : *set) {
        if (j >= n || j == a.anchor) {
          throw Error(ErrorKind::kContract,
                      who + " references an invalid index " + std::to_string(j));
        }
      }
    }
  }
}

// Per-anchor loss; when `coef` is given, also dL/ds_ij for every pair member,
// positives first, then negatives.
double AnchorLoss(const Eigen::MatrixXd& z, double tau, const PairIndex& a,
                  LossForm form, std::vector<double>* coef) {
  const auto zi = z.row(static_cast<Eigen::Index>(a.anchor));
  const size_t np = a.positives.size();
  const size_t nn = a.negatives.size();
  std::vector<double> sn(nn);
  double m = -INFINITY;
  for (size_t k = 0; k < nn; ++k) {
    sn[k] = zi.dot(z.row(static_cast<Eigen::Index>(a.negatives[k]))) / tau;
    m = std::max(m, sn[k]);
  }
  double denom = 0.0;
  for (double s : sn) denom += std::exp(s - m);
  const double lse = m + std::log(denom);
  const double inv_p = 1.0 / static_cast<double>(np);

  if (coef) coef->assign(np + nn, 0.0);
  double loss = 0.0;
  if (form == LossForm::kLog) {
    for (size_t k = 0; k < np; ++k) {
      const double sp =
          zi.dot(z.row(static_cast<Eigen::Index>(a.positives[k]))) / tau;
      loss -= inv_p * (sp - lse);
      if (coef) (*coef)[k] = -inv_p;
    }
    if (coef) {
      for (size_t k = 0; k < nn; ++k) (*coef)[np + k] = std::exp(sn[k] - lse);
    }
    return loss;
  }
  double ratio_sum = 0.0;
  for (size_t k = 0; k < np; ++k) {
    const double sp =
        zi.dot(z.row(static_cast<Eigen::Index>(a.positives[k]))) / tau;
    const double r = std::exp(sp - lse);
    ratio_sum += r;
    if (coef) (*coef)[k] = -inv_p * r;
  }
  loss = -inv_p * ratio_sum;
  if (coef) {
    for (size_t k = 0; k < nn; ++k) {
      (*coef)[np + k] = inv_p * ratio_sum * std::exp(sn[k] - lse);
    }
  }
  return loss;
}

}  // namespace

PairSet BuildPairs(std::span<const int> labels, std::span<const int> groups,
                   PairMode mode) {
  if (labels.size() != groups.size()) {
    throw Error(ErrorKind::kShape, "labels and groups differ in length");
  }
  PairSet out;
  const size_t n = labels.size();
  for (size_t i = 0; i < n; ++i) {
    PairIndex a;
    a.anchor = i;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool same_label = labels[j] == labels[i];
      const bool same_group = groups[j] == groups[i];
      if (mode == PairMode::kGroupAware) {
        if (same_label && !same_group) a.positives.push_back(j);
        if (!same_label && same_group) a.negatives.push_back(j);
      } else {
        (same_label ? a.positives : a.negatives).push_back(j);
      }
    }
    if (a.positives.empty() || a.negatives.empty()) {
      ++out.dropped;
    } else {
      out.anchors.push_back(std::move(a));
    }
  }
  return out;
}

EmbeddingBatch::EmbeddingBatch(Eigen::MatrixXd z, double tau)
    : z_(std::move(z)), tau_(tau) {
  if (!(tau_ > 0.0)) {
    throw Error(ErrorKind::kContract, "temperature must be positive");
  }
  for (Eigen::Index i = 0; i < z_.rows(); ++i) {
    if (!(std::abs(z_.row(i).norm() - 1.0) <= kUnitNormTolerance)) {
      throw Error(ErrorKind::kContract,
                  "embedding row " + std::to_string(i) + " is not unit norm");
    }
  }
}

EmbeddingBatch EmbeddingBatch::Unchecked(Eigen::MatrixXd z, double tau) {
  if (!(tau > 0.0)) {
    throw Error(ErrorKind::kContract, "temperature must be positive");
  }
  EmbeddingBatch b;
  b.z_ = std::move(z);
  b.tau_ = tau;
  return b;
}

double ContrastiveLoss(const EmbeddingBatch& batch,
                       std::span<const PairIndex> pairs, LossForm form) {
  CheckPairs(batch.size(), pairs);
  double loss = 0.0;
  for (const PairIndex& a : pairs) {
    loss += AnchorLoss(batch.z(), batch.tau(), a, form, nullptr);
  }
  return loss;
}

LossAndGrad ContrastiveLossGrad(const EmbeddingBatch& batch,
                                std::span<const PairIndex> pairs,
                                LossForm form) {
  CheckPairs(batch.size(), pairs);
  const Eigen::MatrixXd& z = batch.z();
  const double tau = batch.tau();
  LossAndGrad out;
  out.grad = Eigen::MatrixXd::Zero(z.rows(), z.cols());
  std::vector<double> coef;
  for (const PairIndex& a : pairs) {
    out.loss += AnchorLoss(z, tau, a, form, &coef);
    const auto i = static_cast<Eigen::Index>(a.anchor);
    size_t k = 0;
    for (const auto* set : {&a.positives, &a.negatives}) {
      for (size_t j_raw : *set) {
        const auto j = static_cast<Eigen::Index>(j_raw);
        const double c = coef[k++] / tau;
        out.grad.row(i) += c * z.row(j);
        out.grad.row(j) += c * z.row(i);
      }
    }
  }
  return out;
}

}  // namespace fairscl
