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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "fairscl/error.hpp"
#include "fairscl/train.hpp"

namespace fairscl {
namespace {

struct Batch {
  Eigen::MatrixXd x;
  std::vector<int> labels;
  std::vector<int> groups;
};

Batch Gather(const Eigen::MatrixXd& x, std::span<const int> labels,
             std::span<const int> groups, std::span<const size_t> idx) {
  Batch b;
  b.x.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (size_t r = 0; r < idx.size(); ++r) {
    b.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(idx[r]));
    b.labels.push_back(labels[idx[r]]);
    if (!groups.empty()) b.groups.push_back(groups[idx[r]]);
  }
  return b;
}

ModelShape ShapeFor(const Dataset& data, const TrainConfig& config,
                    size_t group_classes) {
  ModelShape shape;
  shape.feature_dim = data.feature_dim();
  shape.encoder_widths = config.encoder_widths;
  shape.embed_dim = config.embed_dim;
  shape.group_classes = group_classes;
  return shape;
}

void CheckTrainable(const Dataset& data, const TrainConfig& config,
                    bool needs_attribute) {
  config.Validate();
  if (data.size() == 0) {
    throw Error(ErrorKind::kValidation, "training set is empty");
  }
  if (needs_attribute && !data.attribute(config.attribute).usable()) {
    throw Error(ErrorKind::kConfig, "attribute '" + config.attribute +
                                        "' has a single category");
  }
}

void Finish(EpochStats& e, double loss_sum) {
  const size_t stepped = e.batches - e.skipped_batches;
  e.mean_loss = stepped > 0 ? loss_sum / static_cast<double>(stepped) : 0.0;
}

// Supervised BCE epochs, shared by the two-phase fine-tune and ERM.
void SupervisedEpochs(ModelState& state, const Dataset& data, int epochs,
                      const TrainConfig& config, double learning_rate,
                      RandomEngine& rng, TrainLog& log) {
  const Eigen::MatrixXd& x = data.features();
  for (int epoch = 0; epoch < epochs; ++epoch) {
    EpochStats stats;
    double loss_sum = 0.0;
    for (const auto& idx : ShuffledBatches(data.size(), config.batch_size, rng)) {
      const Batch b = Gather(x, data.labels(), {}, idx);
      const LossGrad lg = BceLossGrad(state, b.x, b.labels);
      AdamStep(state, lg.grad, learning_rate);
      loss_sum += lg.loss;
      ++stats.batches;
    }
    Finish(stats, loss_sum);
    log.supervised.push_back(stats);
  }
}

TrainResult TrainTwoPhase(const Dataset& train, const TrainConfig& config,
                          const TrainHooks& hooks, PairMode mode) {
  CheckTrainable(train, config, true);
  TrainResult result;
  result.state = ModelState::Initialize(ShapeFor(train, config, 0), config.seed);
  ModelState& state = result.state;
  RandomEngine rng(DeriveSeed(config.seed, "batches"));

  const SubgroupView view = train.View(config.attribute);
  const std::vector<int> groups(view.membership().begin(),
                                view.membership().end());
  const Eigen::MatrixXd& x = train.features();
  for (int epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
    EpochStats stats;
    double loss_sum = 0.0;
    for (const auto& idx :
         StratifiedBatches(train.labels(), groups, config.batch_size, rng)) {
      const Batch b = Gather(x, train.labels(), groups, idx);
      const ContrastiveStepResult step = ContrastiveStep(
          state, b.x, b.labels, b.groups, mode, config, config.learning_rate);
      ++stats.batches;
      stats.anchors += step.anchors;
      stats.dropped_anchors += step.dropped;
      if (step.anchors + step.dropped > 0 &&
          static_cast<double>(step.dropped) >
              kDropWarningFraction * static_cast<double>(step.anchors + step.dropped)) {
        ++stats.high_drop_batches;
      }
      if (step.stepped) {
        loss_sum += step.loss;
      } else {
        ++stats.skipped_batches;
      }
    }
    if (stats.skipped_batches == stats.batches) {
      throw Error(ErrorKind::kPretrainingInfeasible,
                  "no batch of pretraining epoch " + std::to_string(epoch) +
                      " has an anchor with both positives and negatives");
    }
    if (stats.high_drop_batches > 0) {
      result.log.warnings.push_back(
          "epoch " + std::to_string(epoch) + ": " +
          std::to_string(stats.high_drop_batches) +
          " batches dropped more than 90% of anchors");
    }
    Finish(stats, loss_sum);
    result.log.pretrain.push_back(stats);
  }

  // Head swap: the prediction head takes over from the contrastive head.
  result.log.finetune_start_hash = state.EncoderHash();
  if (hooks.on_finetune_start) hooks.on_finetune_start(state);
  state.ResetOptimizer();
  SupervisedEpochs(state, train, config.finetune_epochs, config,
                   config.finetune_rate(), rng, result.log);
  return result;
}

}  // namespace

TrainConfig TrainConfig::Desk() {
  TrainConfig c;
  c.learning_rate = 1e-3;
  c.finetune_learning_rate = 1e-4;
  return c;
}

void TrainConfig::Validate() const {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::kConfig, "train config: " + msg);
  };
  if (pretrain_epochs < 0 || finetune_epochs < 0) fail("epochs must be >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail("learning_rate must be positive");
  }
  if (finetune_learning_rate &&
      (!(*finetune_learning_rate > 0.0) || !std::isfinite(*finetune_learning_rate))) {
    fail("finetune_learning_rate must be positive");
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    fail("temperature must be positive");
  }
  if (batch_size == 0) fail("batch_size must be positive");
  if (!(adversary_weight >= 0.0) || !std::isfinite(adversary_weight)) {
    fail("adversary_weight must be >= 0");
  }
  if (embed_dim == 0) fail("embed_dim must be positive");
  for (size_t w : encoder_widths) {
    if (w == 0) fail("encoder widths must be positive");
  }
  if (attribute.empty()) fail("attribute is empty");
}

size_t TrainLog::anchors_used() const {
  size_t n = 0;
  for (const auto& e : pretrain) n += e.anchors;
  return n;
}

size_t TrainLog::anchors_dropped() const {
  size_t n = 0;
  for (const auto& e : pretrain) n += e.dropped_anchors;
  return n;
}

std::vector<std::vector<size_t>> ShuffledBatches(size_t n, size_t batch_size,
                                                 RandomEngine& rng) {
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < n; start += batch_size) {
    batches.emplace_back(order.begin() + static_cast<long>(start),
                         order.begin() + static_cast<long>(std::min(n, start + batch_size)));
  }
  return batches;
}

std::vector<std::vector<size_t>> StratifiedBatches(std::span<const int> labels,
                                                   std::span<const int> groups,
                                                   size_t batch_size,
                                                   RandomEngine& rng) {
  if (labels.size() != groups.size()) {
    throw Error(ErrorKind::kShape, "labels and groups differ in length");
  }
  const size_t n = labels.size();
  std::map<std::pair<int, int>, std::vector<size_t>> cells;
  for (size_t i = 0; i < n; ++i) cells[{labels[i], groups[i]}].push_back(i);
  // Member k of a cell of size m is placed at (k + u) / m for a per-cell
  // offset u, so each cell is spread evenly over the epoch.
  std::vector<double> key(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& [cell, members] : cells) {
    std::shuffle(members.begin(), members.end(), rng);
    const double u = unit(rng);
    const auto m = static_cast<double>(members.size());
    for (size_t k = 0; k < members.size(); ++k) {
      key[members[k]] = (static_cast<double>(k) + u) / m;
    }
  }
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return key[a] < key[b]; });
  std::vector<std::vector<size_t>> batches;
  for (size_t start = 0; start < n; start += batch_size) {
    batches.emplace_back(order.begin() + static_cast<long>(start),
                         order.begin() + static_cast<long>(std::min(n, start + batch_size)));
  }
  return batches;
}

ContrastiveStepResult ContrastiveStep(ModelState& state,
                                      const Eigen::MatrixXd& x,
                                      std::span<const int> labels,
                                      std::span<const int> groups,
                                      PairMode mode, const TrainConfig& config,
                                      double learning_rate) {
  const PairSet pairs = BuildPairs(labels, groups, mode);
  ContrastiveStepResult out;
  out.anchors = pairs.anchors.size();
  out.dropped = pairs.dropped;
  if (pairs.anchors.empty()) return out;
  const double scale = 1.0 / static_cast<double>(pairs.anchors.size());
  const LossGrad lg = ContrastiveParamLossGrad(
      state, x, pairs.anchors, config.temperature, config.loss_form, scale);
  AdamStep(state, lg.grad, learning_rate);
  out.loss = lg.loss;
  out.stepped = true;
  return out;
}

TrainResult TrainProposed(const Dataset& train, const TrainConfig& config,
                          const TrainHooks& hooks) {
  return TrainTwoPhase(train, config, hooks, PairMode::kGroupAware);
}

TrainResult TrainScl(const Dataset& train, const TrainConfig& config,
                     const TrainHooks& hooks) {
  return TrainTwoPhase(train, config, hooks, PairMode::kPlainScl);
}

TrainResult TrainErm(const Dataset& train, const TrainConfig& config) {
  CheckTrainable(train, config, false);
  TrainResult result;
  result.state = ModelState::Initialize(ShapeFor(train, config, 0), config.seed);
  RandomEngine rng(DeriveSeed(config.seed, "batches"));
  SupervisedEpochs(result.state, train,
                   config.pretrain_epochs + config.finetune_epochs, config,
                   config.learning_rate, rng, result.log);
  return result;
}

TrainResult TrainBalanced(const Dataset& train, const TrainConfig& config) {
  CheckTrainable(train, config, true);
  return TrainErm(BalancedResample(train, config.attribute, config.seed), config);
}

TrainResult TrainAdv(const Dataset& train, const TrainConfig& config) {
  CheckTrainable(train, config, true);
  const SubgroupView view = train.View(config.attribute);
  const std::vector<int> groups(view.membership().begin(),
                                view.membership().end());
  TrainResult result;
  result.state = ModelState::Initialize(
      ShapeFor(train, config, view.num_categories()), config.seed);
  RandomEngine rng(DeriveSeed(config.seed, "batches"));
  const Eigen::MatrixXd& x = train.features();
  const int epochs = config.pretrain_epochs + config.finetune_epochs;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    EpochStats stats;
    double loss_sum = 0.0;
    for (const auto& idx : ShuffledBatches(train.size(), config.batch_size, rng)) {
      const Batch b = Gather(x, train.labels(), groups, idx);
      const AdvGrad g = AdvLossGrad(result.state, b.x, b.labels, b.groups,
                                    config.adversary_weight);
      AdamStep(result.state, g.total, config.learning_rate);
      loss_sum += g.bce;
      ++stats.batches;
    }
    Finish(stats, loss_sum);
    result.log.supervised.push_back(stats);
  }
  return result;
}

ScoredSet Predict(const ModelState& state, const Dataset& data,
                  std::optional<std::string_view> attribute) {
  const Eigen::MatrixXd p = Forward(state, data.features(), Head::kPrediction);
  std::vector<double> scores(p.data(), p.data() + p.rows());
  std::optional<SubgroupView> view;
  if (attribute) view = data.View(*attribute);
  return ScoredSet(std::move(scores), data.labels(), std::move(view));
}

double GroupHeadAccuracy(const ModelState& state, const Dataset& data,
                         std::string_view attribute) {
  const SubgroupView view = data.View(attribute);
  const Eigen::MatrixXd prob = Forward(state, data.features(), Head::kGroup);
  if (static_cast<size_t>(prob.cols()) != view.num_categories()) {
    throw Error(ErrorKind::kShape, "group head width differs from category count");
  }
  size_t hits = 0;
  for (Eigen::Index i = 0; i < prob.rows(); ++i) {
    Eigen::Index arg = 0;
    prob.row(i).maxCoeff(&arg);
    hits += static_cast<int>(arg) == view.membership()[static_cast<size_t>(i)];
  }
  return data.size() == 0 ? 0.0
                          : static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace fairscl
