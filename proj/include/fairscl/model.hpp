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

// Feedforward encoder with contrastive, prediction and group heads.
//
//   x -> [dense -> relu] * L -> h
//   h -> dense(embed_dim) -> L2 normalize       (contrastive head)
//   h -> dense(1) -> sigmoid                    (prediction head)
//   h -> dense(K) -> softmax                    (group head, adversarial only)
//
// Rows are records. A dense layer computes a * W^T + b with W of shape
// (out, in).

#ifndef FAIRSCL_MODEL_HPP_
#define FAIRSCL_MODEL_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fairscl/contrastive.hpp"

namespace fairscl {

struct DenseLayer {
  Eigen::MatrixXd weight;  // (out, in)
  Eigen::VectorXd bias;    // (out)

  bool empty() const { return weight.size() == 0 && bias.size() == 0; }
  bool operator==(const DenseLayer& other) const;
};

// One value per trainable layer. Also used for gradients and optimizer
// moments; an empty layer in a gradient means "no gradient".
struct Params {
  std::vector<DenseLayer> encoder;
  DenseLayer contrastive_head;
  DenseLayer prediction_head;
  DenseLayer group_head;  // empty unless the model has one

  // Flattened order: encoder.0 .. encoder.{L-1}, contrastive_head,
  // prediction_head, group_head.
  std::vector<DenseLayer*> Layers();
  std::vector<const DenseLayer*> Layers() const;
  static std::vector<std::string> LayerNames(size_t encoder_depth);

  // Same shapes, all zeros (empty layers stay empty).
  static Params ZerosLike(const Params& like);
  // Same structure with every layer empty.
  static Params EmptyLike(const Params& like);

  bool operator==(const Params&) const = default;
};

struct ModelShape {
  size_t feature_dim = 0;
  std::vector<size_t> encoder_widths = {64, 64};
  size_t embed_dim = 128;
  size_t group_classes = 0;  // 0 = no group head

  bool operator==(const ModelShape&) const = default;
};

struct ModelState {
  ModelShape shape;
  Params params;
  Params first_moment;
  Params second_moment;
  int64_t step = 0;

  // Weights uniform in +-1/sqrt(fan_in), as are biases; the prediction head
  // starts at zero. The group head draws from its own stream, so the other
  // layers do not depend on whether it exists.
  static ModelState Initialize(const ModelShape& shape, uint64_t seed);

  // Clears Adam moments and the step counter.
  void ResetOptimizer();

  // FNV-1a over encoder weights and biases.
  uint64_t EncoderHash() const;

  bool operator==(const ModelState&) const = default;
};

enum class Head { kContrastive, kPrediction, kGroup };

struct EncoderCache {
  std::vector<Eigen::MatrixXd> inputs;  // input of each encoder layer
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  Eigen::MatrixXd out;                  // relu of the last layer
};

// Throws kShape on a column count other than feature_dim.
EncoderCache EncodeWithCache(const ModelState& state, const Eigen::MatrixXd& x);

// Contrastive: unit-norm embeddings (n, embed_dim). Prediction: probabilities
// (n, 1). Group: class probabilities (n, K).
Eigen::MatrixXd Forward(const ModelState& state, const Eigen::MatrixXd& x,
                        Head head);

inline constexpr double kBceClamp = 1e-7;

struct LossGrad {
  double loss = 0.0;
  Params grad;  // layers not touched by the loss are empty
};

// Mean binary cross-entropy of the prediction head, probabilities clamped to
// [kBceClamp, 1 - kBceClamp] inside the log.
LossGrad BceLossGrad(const ModelState& state, const Eigen::MatrixXd& x,
                     std::span<const int> labels);
double BceLoss(const ModelState& state, const Eigen::MatrixXd& x,
               std::span<const int> labels);

// `scale` times the contrastive loss of the contrastive-head embeddings,
// differentiated through normalization into the head and encoder.
LossGrad ContrastiveParamLossGrad(const ModelState& state,
                                  const Eigen::MatrixXd& x,
                                  std::span<const PairIndex> pairs, double tau,
                                  LossForm form, double scale);

// Mean softmax cross-entropy of the group head, with the ordinary
// (unreversed) gradient into the encoder.
LossGrad GroupLossGrad(const ModelState& state, const Eigen::MatrixXd& x,
                       std::span<const int> groups);

struct AdvGrad {
  double bce = 0.0;
  double group_ce = 0.0;
  Params total;
  Params from_prediction;  // BCE path
  Params from_group;       // group path, encoder part reversed and scaled
};

// Joint adversarial gradient: the group head minimizes its cross-entropy and
// the encoder receives -lambda times the group path gradient.
AdvGrad AdvLossGrad(const ModelState& state, const Eigen::MatrixXd& x,
                    std::span<const int> labels, std::span<const int> groups,
                    double lambda);

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;

// One bias-corrected Adam update. Layers with an empty gradient are left
// alone (moments included). Throws kNanGuard naming the layer, before any
// parameter changes, on a non-finite gradient or update; throws kShape on a
// gradient shape mismatch.
void AdamStep(ModelState& state, const Params& grad, double learning_rate);

}  // namespace fairscl

#endif  // FAIRSCL_MODEL_HPP_
