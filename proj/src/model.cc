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

#include "fairscl/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fairscl/error.hpp"
#include "fairscl/random.hpp"

namespace fairscl {
namespace {

constexpr double kMinNorm = 1e-12;

DenseLayer UniformLayer(size_t out, size_t in, RandomEngine& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  DenseLayer layer;
  layer.weight.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  layer.bias.resize(static_cast<Eigen::Index>(out));
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      layer.weight(r, c) = u(rng);
    }
  }
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = u(rng);
  return layer;
}

DenseLayer ZeroLayer(Eigen::Index out, Eigen::Index in) {
  return DenseLayer{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

Eigen::MatrixXd Affine(const DenseLayer& layer, const Eigen::MatrixXd& a) {
  return (a * layer.weight.transpose()).rowwise() + layer.bias.transpose();
}

// Fills grad->encoder from the gradient at the encoder output.
void EncoderBackward(const ModelState& state, const EncoderCache& cache,
                     Eigen::MatrixXd d_out, Params* grad) {
  const size_t depth = state.params.encoder.size();
  grad->encoder.assign(depth, DenseLayer{});
  for (size_t l = depth; l-- > 0;) {
    const Eigen::MatrixXd d_pre =
        d_out.cwiseProduct((cache.pre[l].array() > 0.0).cast<double>().matrix());
    grad->encoder[l].weight = d_pre.transpose() * cache.inputs[l];
    grad->encoder[l].bias = d_pre.colwise().sum().transpose();
    if (l > 0) d_out = d_pre * state.params.encoder[l].weight;
  }
}

Eigen::MatrixXd Softmax(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp().matrix();
  return p.array().colwise() / p.rowwise().sum().array();
}

void CheckLabels(const Eigen::MatrixXd& x, size_t n, const char* what) {
  if (static_cast<size_t>(x.rows()) != n) {
    throw Error(ErrorKind::kShape,
                std::string(what) + " length differs from the batch size");
  }
}

void Hash(uint64_t* h, const Eigen::MatrixXd& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const double v = m(r, c);
      char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      *h = Fnv1a64(std::string_view(bytes, sizeof(double)), *h);
    }
  }
}

}  // namespace

bool DenseLayer::operator==(const DenseLayer& other) const {
  return weight.rows() == other.weight.rows() &&
         weight.cols() == other.weight.cols() &&
         bias.size() == other.bias.size() && weight == other.weight &&
         bias == other.bias;
}

std::vector<DenseLayer*> Params::Layers() {
  std::vector<DenseLayer*> out;
  for (auto& l : encoder) out.push_back(&l);
  out.push_back(&contrastive_head);
  out.push_back(&prediction_head);
  out.push_back(&group_head);
  return out;
}

std::vector<const DenseLayer*> Params::Layers() const {
  std::vector<const DenseLayer*> out;
  for (const auto& l : encoder) out.push_back(&l);
  out.push_back(&contrastive_head);
  out.push_back(&prediction_head);
  out.push_back(&group_head);
  return out;
}

std::vector<std::string> Params::LayerNames(size_t encoder_depth) {
  std::vector<std::string> names;
  for (size_t l = 0; l < encoder_depth; ++l) {
    names.push_back("encoder." + std::to_string(l));
  }
  names.push_back("contrastive_head");
  names.push_back("prediction_head");
  names.push_back("group_head");
  return names;
}

Params Params::ZerosLike(const Params& like) {
  Params out = like;
  for (DenseLayer* l : out.Layers()) {
    l->weight.setZero();
    l->bias.setZero();
  }
  return out;
}

Params Params::EmptyLike(const Params& like) {
  Params out;
  out.encoder.resize(like.encoder.size());
  return out;
}

ModelState ModelState::Initialize(const ModelShape& shape, uint64_t seed) {
  if (shape.feature_dim == 0 || shape.embed_dim == 0) {
    throw Error(ErrorKind::kConfig, "model dimensions must be positive");
  }
  for (size_t w : shape.encoder_widths) {
    if (w == 0) throw Error(ErrorKind::kConfig, "encoder widths must be positive");
  }
  if (shape.group_classes == 1) {
    throw Error(ErrorKind::kConfig, "a group head needs at least two classes");
  }
  ModelState state;
  state.shape = shape;
  RandomEngine rng(DeriveSeed(seed, "init"));
  size_t width = shape.feature_dim;
  for (size_t w : shape.encoder_widths) {
    state.params.encoder.push_back(UniformLayer(w, width, rng));
    width = w;
  }
  state.params.contrastive_head = UniformLayer(shape.embed_dim, width, rng);
  state.params.prediction_head = ZeroLayer(1, static_cast<Eigen::Index>(width));
  if (shape.group_classes > 0) {
    RandomEngine adv_rng(DeriveSeed(seed, "adv_head"));
    state.params.group_head = UniformLayer(shape.group_classes, width, adv_rng);
  }
  state.ResetOptimizer();
  return state;
}

void ModelState::ResetOptimizer() {
  first_moment = Params::ZerosLike(params);
  second_moment = Params::ZerosLike(params);
  step = 0;
}

uint64_t ModelState::EncoderHash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const DenseLayer& l : params.encoder) {
    Hash(&h, l.weight);
    Hash(&h, l.bias);
  }
  return h;
}

EncoderCache EncodeWithCache(const ModelState& state, const Eigen::MatrixXd& x) {
  if (static_cast<size_t>(x.cols()) != state.shape.feature_dim) {
    throw Error(ErrorKind::kShape,
                "expected " + std::to_string(state.shape.feature_dim) +
                    " feature columns, got " + std::to_string(x.cols()));
  }
  EncoderCache cache;
  Eigen::MatrixXd a = x;
  for (const DenseLayer& layer : state.params.encoder) {
    cache.inputs.push_back(a);
    cache.pre.push_back(Affine(layer, a));
    a = cache.pre.back().cwiseMax(0.0);
  }
  cache.out = std::move(a);
  return cache;
}

Eigen::MatrixXd Forward(const ModelState& state, const Eigen::MatrixXd& x,
                        Head head) {
  const Eigen::MatrixXd h = EncodeWithCache(state, x).out;
  switch (head) {
    case Head::kContrastive: {
      const Eigen::MatrixXd u = Affine(state.params.contrastive_head, h);
      const Eigen::VectorXd norms = u.rowwise().norm().cwiseMax(kMinNorm);
      return u.array().colwise() / norms.array();
    }
    case Head::kPrediction: {
      const Eigen::MatrixXd logit = Affine(state.params.prediction_head, h);
      return logit.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    }
    case Head::kGroup:
      if (state.params.group_head.empty()) {
        throw Error(ErrorKind::kContract, "model has no group head");
      }
      return Softmax(Affine(state.params.group_head, h));
  }
  throw Error(ErrorKind::kContract, "unknown head");
}

LossGrad BceLossGrad(const ModelState& state, const Eigen::MatrixXd& x,
                     std::span<const int> labels) {
  CheckLabels(x, labels.size(), "label");
  const auto n = static_cast<double>(labels.size());
  const EncoderCache cache = EncodeWithCache(state, x);
  const DenseLayer& head = state.params.prediction_head;
  const Eigen::MatrixXd logit = Affine(head, cache.out);

  LossGrad out;
  out.grad = Params::EmptyLike(state.params);
  Eigen::MatrixXd d_logit(logit.rows(), 1);
  for (Eigen::Index i = 0; i < logit.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logit(i, 0)));
    const double pc = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
    const int y = labels[static_cast<size_t>(i)];
    out.loss -= (y == 1 ? std::log(pc) : std::log(1.0 - pc)) / n;
    d_logit(i, 0) = (p - y) / n;
  }
  out.grad.prediction_head.weight = d_logit.transpose() * cache.out;
  out.grad.prediction_head.bias = d_logit.colwise().sum().transpose();
  EncoderBackward(state, cache, d_logit * head.weight, &out.grad);
  return out;
}

double BceLoss(const ModelState& state, const Eigen::MatrixXd& x,
               std::span<const int> labels) {
  CheckLabels(x, labels.size(), "label");
  const Eigen::MatrixXd p = Forward(state, x, Head::kPrediction);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double pc = std::clamp(p(i, 0), kBceClamp, 1.0 - kBceClamp);
    loss -= labels[static_cast<size_t>(i)] == 1 ? std::log(pc)
                                                 : std::log(1.0 - pc);
  }
  return loss / static_cast<double>(labels.size());
}

LossGrad ContrastiveParamLossGrad(const ModelState& state,
                                  const Eigen::MatrixXd& x,
                                  std::span<const PairIndex> pairs, double tau,
                                  LossForm form, double scale) {
  const EncoderCache cache = EncodeWithCache(state, x);
  const DenseLayer& head = state.params.contrastive_head;
  const Eigen::MatrixXd u = Affine(head, cache.out);
  const Eigen::VectorXd norms = u.rowwise().norm().cwiseMax(kMinNorm);
  const Eigen::MatrixXd z = u.array().colwise() / norms.array();

  const LossAndGrad lg =
      ContrastiveLossGrad(EmbeddingBatch::Unchecked(z, tau), pairs, form);
  const Eigen::MatrixXd dz = scale * lg.grad;
  const Eigen::VectorXd radial = z.cwiseProduct(dz).rowwise().sum();
  const Eigen::MatrixXd du =
      (dz - z.cwiseProduct(radial.replicate(1, z.cols()))).array().colwise() /
      norms.array();

  LossGrad out;
  out.loss = scale * lg.loss;
  out.grad = Params::EmptyLike(state.params);
  out.grad.contrastive_head.weight = du.transpose() * cache.out;
  out.grad.contrastive_head.bias = du.colwise().sum().transpose();
  EncoderBackward(state, cache, du * head.weight, &out.grad);
  return out;
}

namespace {

struct GroupPath {
  double loss = 0.0;
  DenseLayer head_grad;
  Eigen::MatrixXd d_encoder_out;
};

GroupPath GroupBackward(const ModelState& state, const EncoderCache& cache,
                        std::span<const int> groups) {
  const DenseLayer& head = state.params.group_head;
  if (head.empty()) {
    throw Error(ErrorKind::kContract, "model has no group head");
  }
  const Eigen::MatrixXd prob = Softmax(Affine(head, cache.out));
  const auto n = static_cast<double>(groups.size());
  Eigen::MatrixXd d_logits = prob;
  GroupPath out;
  for (Eigen::Index i = 0; i < prob.rows(); ++i) {
    const int g = groups[static_cast<size_t>(i)];
    if (g < 0 || g >= prob.cols()) {
      throw Error(ErrorKind::kContract, "group index outside the group head");
    }
    out.loss -= std::log(std::max(prob(i, g), 1e-300)) / n;
    d_logits(i, g) -= 1.0;
  }
  d_logits /= n;
  out.head_grad.weight = d_logits.transpose() * cache.out;
  out.head_grad.bias = d_logits.colwise().sum().transpose();
  out.d_encoder_out = d_logits * head.weight;
  return out;
}

}  // namespace

LossGrad GroupLossGrad(const ModelState& state, const Eigen::MatrixXd& x,
                       std::span<const int> groups) {
  CheckLabels(x, groups.size(), "group");
  const EncoderCache cache = EncodeWithCache(state, x);
  GroupPath path = GroupBackward(state, cache, groups);
  LossGrad out;
  out.loss = path.loss;
  out.grad = Params::EmptyLike(state.params);
  out.grad.group_head = std::move(path.head_grad);
  EncoderBackward(state, cache, path.d_encoder_out, &out.grad);
  return out;
}

AdvGrad AdvLossGrad(const ModelState& state, const Eigen::MatrixXd& x,
                    std::span<const int> labels, std::span<const int> groups,
                    double lambda) {
  CheckLabels(x, labels.size(), "label");
  CheckLabels(x, groups.size(), "group");
  const EncoderCache cache = EncodeWithCache(state, x);
  const DenseLayer& pred = state.params.prediction_head;
  const Eigen::MatrixXd logit = Affine(pred, cache.out);
  const auto n = static_cast<double>(labels.size());

  AdvGrad out;
  Eigen::MatrixXd d_logit(logit.rows(), 1);
  for (Eigen::Index i = 0; i < logit.rows(); ++i) {
    const double p = 1.0 / (1.0 + std::exp(-logit(i, 0)));
    const double pc = std::clamp(p, kBceClamp, 1.0 - kBceClamp);
    const int y = labels[static_cast<size_t>(i)];
    out.bce -= (y == 1 ? std::log(pc) : std::log(1.0 - pc)) / n;
    d_logit(i, 0) = (p - y) / n;
  }
  const Eigen::MatrixXd d_pred_out = d_logit * pred.weight;
  GroupPath path = GroupBackward(state, cache, groups);
  out.group_ce = path.loss;
  const Eigen::MatrixXd d_group_out = -lambda * path.d_encoder_out;

  out.from_prediction = Params::EmptyLike(state.params);
  out.from_prediction.prediction_head.weight = d_logit.transpose() * cache.out;
  out.from_prediction.prediction_head.bias = d_logit.colwise().sum().transpose();
  EncoderBackward(state, cache, d_pred_out, &out.from_prediction);

  out.from_group = Params::EmptyLike(state.params);
  out.from_group.group_head = path.head_grad;
  EncoderBackward(state, cache, d_group_out, &out.from_group);

  out.total = Params::EmptyLike(state.params);
  out.total.prediction_head = out.from_prediction.prediction_head;
  out.total.group_head = std::move(path.head_grad);
  EncoderBackward(state, cache, d_pred_out + d_group_out, &out.total);
  return out;
}

void AdamStep(ModelState& state, const Params& grad, double learning_rate) {
  const std::vector<std::string> names =
      Params::LayerNames(state.params.encoder.size());
  if (grad.encoder.size() != state.params.encoder.size()) {
    throw Error(ErrorKind::kShape, "gradient encoder depth mismatch");
  }
  std::vector<DenseLayer*> params = state.params.Layers();
  std::vector<DenseLayer*> m = state.first_moment.Layers();
  std::vector<DenseLayer*> v = state.second_moment.Layers();
  const std::vector<const DenseLayer*> g = grad.Layers();

  const int64_t t = state.step + 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(t));

  struct Pending {
    size_t layer;
    DenseLayer param, m, v;
  };
  std::vector<Pending> pending;
  for (size_t k = 0; k < g.size(); ++k) {
    if (g[k]->empty()) continue;
    if (g[k]->weight.rows() != params[k]->weight.rows() ||
        g[k]->weight.cols() != params[k]->weight.cols() ||
        g[k]->bias.size() != params[k]->bias.size()) {
      throw Error(ErrorKind::kShape, "gradient shape mismatch in " + names[k]);
    }
    if (!g[k]->weight.allFinite() || !g[k]->bias.allFinite()) {
      throw Error(ErrorKind::kNanGuard, "non-finite gradient in " + names[k]);
    }
    Pending p{k, *params[k], *m[k], *v[k]};
    auto update = [&](auto& w, auto& mw, auto& vw, const auto& gw) {
      mw = kAdamBeta1 * mw + (1.0 - kAdamBeta1) * gw;
      vw = kAdamBeta2 * vw + (1.0 - kAdamBeta2) * gw.cwiseProduct(gw);
      w.array() -= learning_rate * (mw.array() / bc1) /
                   ((vw.array() / bc2).sqrt() + kAdamEpsilon);
    };
    update(p.param.weight, p.m.weight, p.v.weight, g[k]->weight);
    update(p.param.bias, p.m.bias, p.v.bias, g[k]->bias);
    if (!p.param.weight.allFinite() || !p.param.bias.allFinite()) {
      throw Error(ErrorKind::kNanGuard, "non-finite parameter update in " + names[k]);
    }
    pending.push_back(std::move(p));
  }
  for (Pending& p : pending) {
    *params[p.layer] = std::move(p.param);
    *m[p.layer] = std::move(p.m);
    *v[p.layer] = std::move(p.v);
  }
  state.step = t;
}

}  // namespace fairscl
