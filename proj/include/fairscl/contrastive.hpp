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

// Group-aware supervised contrastive loss.
//
// For anchor i with positives P(i) and negatives N(i), and similarities
// s_ij = z_i . z_j / tau, the default (log) form is
//
//   L = sum_i -1/|P(i)| sum_{p in P(i)} [ s_ip - log sum_{n in N(i)} exp(s_in) ]
//
// Note the denominator runs over N(i) only. The literal form drops the log:
//
//   L = sum_i -1/|P(i)| sum_{p in P(i)} exp(s_ip) / sum_{n in N(i)} exp(s_in)

#ifndef FAIRSCL_CONTRASTIVE_HPP_
#define FAIRSCL_CONTRASTIVE_HPP_

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace fairscl {

enum class PairMode {
  // P(i): same label, different group. N(i): different label, same group.
  kGroupAware,
  // P(i): same label, j != i. N(i): different label. Groups ignored.
  kPlainScl,
};

struct PairIndex {
  size_t anchor = 0;
  std::vector<size_t> positives;
  std::vector<size_t> negatives;

  bool operator==(const PairIndex&) const = default;
};

inline constexpr double kDropWarningFraction = 0.9;

struct PairSet {
  std::vector<PairIndex> anchors;
  size_t dropped = 0;  // anchors with empty P(i) or N(i)

  size_t batch_size() const { return anchors.size() + dropped; }
  bool HighDropRate() const {
    return batch_size() > 0 &&
           static_cast<double>(dropped) >
               kDropWarningFraction * static_cast<double>(batch_size());
  }
};

// `groups` holds category indices of one attribute. Anchors appear in
// increasing index order, as do the members of every P(i) and N(i).
PairSet BuildPairs(std::span<const int> labels, std::span<const int> groups,
                   PairMode mode);

inline constexpr double kUnitNormTolerance = 1e-9;

// Embeddings (one row per record) and a temperature.
class EmbeddingBatch {
 public:
  // Throws kContract unless tau > 0 and every row has unit norm.
  EmbeddingBatch(Eigen::MatrixXd z, double tau);
  // Skips the norm check. Used for derivatives taken before normalization.
  static EmbeddingBatch Unchecked(Eigen::MatrixXd z, double tau);

  const Eigen::MatrixXd& z() const { return z_; }
  double tau() const { return tau_; }
  Eigen::Index size() const { return z_.rows(); }

 private:
  EmbeddingBatch() = default;

  Eigen::MatrixXd z_;
  double tau_ = 1.0;
};

enum class LossForm { kLog, kLiteral };

// Sum over anchors. Throws kContract on an empty pair list, an anchor with an
// empty P(i) or N(i), or an index outside the batch.
double ContrastiveLoss(const EmbeddingBatch& batch,
                       std::span<const PairIndex> pairs,
                       LossForm form = LossForm::kLog);

struct LossAndGrad {
  double loss = 0.0;
  Eigen::MatrixXd grad;  // dL/dz, same shape as z
};

LossAndGrad ContrastiveLossGrad(const EmbeddingBatch& batch,
                                std::span<const PairIndex> pairs,
                                LossForm form = LossForm::kLog);

}  // namespace fairscl

#endif  // FAIRSCL_CONTRASTIVE_HPP_
