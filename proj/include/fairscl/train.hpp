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

// Two-phase contrastive training and the supervised baselines.
//
// Every trainer is deterministic in (dataset, config). Randomness comes from
// named streams of config.seed: "init" for parameters, "adv_head" for the
// adversarial head and "batches" for the batch schedule.

#ifndef FAIRSCL_TRAIN_HPP_
#define FAIRSCL_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairscl/contrastive.hpp"
#include "fairscl/dataset.hpp"
#include "fairscl/metrics.hpp"
#include "fairscl/model.hpp"
#include "fairscl/random.hpp"

namespace fairscl {

struct TrainConfig {
  int pretrain_epochs = 10;
  int finetune_epochs = 1;
  double learning_rate = 1e-4;
  // Phase-two rate of the two-phase trainers; learning_rate when unset.
  std::optional<double> finetune_learning_rate;
  double temperature = 0.05;
  size_t batch_size = 64;
  uint64_t seed = 0;
  double adversary_weight = 1.0;
  std::string attribute = "group";
  std::vector<size_t> encoder_widths = {64, 64};
  size_t embed_dim = 128;
  LossForm loss_form = LossForm::kLog;

  // Desk-scale preset: the defaults above with learning_rate 1e-3 and a
  // fine-tune rate of 1e-4.
  static TrainConfig Desk();

  // Throws kConfig on a non-positive rate, temperature, batch size or width,
  // negative epoch counts or a negative adversary weight.
  void Validate() const;

  double finetune_rate() const {
    return finetune_learning_rate.value_or(learning_rate);
  }
};

struct EpochStats {
  double mean_loss = 0.0;  // mean over the batches that stepped
  size_t batches = 0;
  size_t skipped_batches = 0;  // contrastive batches without anchors
  size_t anchors = 0;
  size_t dropped_anchors = 0;
  size_t high_drop_batches = 0;  // more than 90% of anchors dropped
};

struct TrainLog {
  std::vector<EpochStats> pretrain;  // contrastive phase
  std::vector<EpochStats> supervised;
  uint64_t finetune_start_hash = 0;  // encoder hash at the head swap
  std::vector<std::string> warnings;

  size_t anchors_used() const;
  size_t anchors_dropped() const;
};

struct TrainResult {
  ModelState state;
  TrainLog log;
};

// Optional observation points, e.g. to inspect the state at the head swap.
struct TrainHooks {
  std::function<void(const ModelState&)> on_finetune_start;
};

// Contrastive pretraining on group-aware pairs, then fine-tuning of encoder
// and prediction head on BCE. Throws kPretrainingInfeasible when every batch
// of a pretraining epoch has no anchor.
TrainResult TrainProposed(const Dataset& train, const TrainConfig& config,
                          const TrainHooks& hooks = {});
// Same as TrainProposed with plain supervised contrastive pairs.
TrainResult TrainScl(const Dataset& train, const TrainConfig& config,
                     const TrainHooks& hooks = {});
// BCE training for pretrain_epochs + finetune_epochs epochs.
TrainResult TrainErm(const Dataset& train, const TrainConfig& config);
// TrainErm on BalancedResample(train, config.attribute, config.seed).
TrainResult TrainBalanced(const Dataset& train, const TrainConfig& config);
// Joint BCE and gradient-reversed group classification.
TrainResult TrainAdv(const Dataset& train, const TrainConfig& config);

struct ContrastiveStepResult {
  double loss = 0.0;  // mean over anchors; 0 when skipped
  size_t anchors = 0;
  size_t dropped = 0;
  bool stepped = false;
};

// One contrastive update on a batch. Minimizes the mean per-anchor loss. A
// batch without anchors leaves the state untouched.
ContrastiveStepResult ContrastiveStep(ModelState& state,
                                      const Eigen::MatrixXd& x,
                                      std::span<const int> labels,
                                      std::span<const int> groups,
                                      PairMode mode, const TrainConfig& config,
                                      double learning_rate);

// Mini-batch orders for one epoch. Stratified orders spread every
// (label, group) cell evenly across the epoch.
std::vector<std::vector<size_t>> ShuffledBatches(size_t n, size_t batch_size,
                                                 RandomEngine& rng);
std::vector<std::vector<size_t>> StratifiedBatches(std::span<const int> labels,
                                                   std::span<const int> groups,
                                                   size_t batch_size,
                                                   RandomEngine& rng);

// Prediction-head probabilities for every record; the view of `attribute`
// is attached when given.
ScoredSet Predict(const ModelState& state, const Dataset& data,
                  std::optional<std::string_view> attribute = std::nullopt);

// Fraction of records whose argmax group-head class matches `attribute`.
double GroupHeadAccuracy(const ModelState& state, const Dataset& data,
                         std::string_view attribute);

}  // namespace fairscl

#endif  // FAIRSCL_TRAIN_HPP_
