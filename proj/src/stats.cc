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

#include "fairscl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "fairscl/error.hpp"
#include "fairscl/random.hpp"

namespace fairscl {
namespace {

bool Defined(const MetricFn& metric, const ScoredSet& set) {
  try {
    metric(set);
    return true;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kUndefinedMetric) throw;
    return false;
  }
}

}  // namespace

uint64_t ResamplePlan::IndexHash(size_t b) const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (size_t i : indices.at(b)) {
    for (int k = 0; k < 8; ++k) {
      h ^= (static_cast<uint64_t>(i) >> (8 * k)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

ResamplePlan PlanResamples(const MetricFn& metric, const ScoredSet& set,
                           size_t B, uint64_t seed) {
  if (B < 2) {
    throw Error(ErrorKind::kConfig, "bootstrap needs B >= 2");
  }
  if (set.size() == 0) {
    throw Error(ErrorKind::kUndefinedMetric, "bootstrap of an empty set");
  }
  ResamplePlan plan;
  plan.seed = seed;
  plan.n = set.size();
  plan.indices.reserve(B);
  const size_t budget = kMaxRedrawsPerReplicate * B;
  std::uniform_int_distribution<size_t> pick(0, set.size() - 1);
  for (size_t b = 0; b < B; ++b) {
    RandomEngine rng(DeriveSeed(seed, static_cast<uint64_t>(b)));
    while (true) {
      std::vector<size_t> idx(set.size());
      for (size_t& i : idx) i = pick(rng);
      if (Defined(metric, set.Subset(idx))) {
        plan.indices.push_back(std::move(idx));
        break;
      }
      if (++plan.redraws > budget) {
        throw Error(ErrorKind::kBootstrapInfeasible,
                    "metric undefined on more than " + std::to_string(budget) +
                        " bootstrap resamples");
      }
    }
  }
  return plan;
}

BootstrapResult EvaluatePlan(const ResamplePlan& plan, const MetricFn& metric,
                             const ScoredSet& set) {
  if (plan.n != set.size()) {
    throw Error(ErrorKind::kShape,
                "resample plan was drawn for a set of different size");
  }
  BootstrapResult out;
  out.point = metric(set);
  out.B = plan.replicates();
  out.seed = plan.seed;
  out.redraws = plan.redraws;
  out.replicates.reserve(out.B);
  for (const auto& idx : plan.indices) {
    out.replicates.push_back(metric(set.Subset(idx)));
  }
  out.ci_low = Quantile(out.replicates, 0.025);
  out.ci_high = Quantile(out.replicates, 0.975);
  return out;
}

BootstrapResult Bootstrap(const MetricFn& metric, const ScoredSet& set,
                          size_t B, uint64_t seed) {
  if (!Defined(metric, set)) {
    throw Error(ErrorKind::kUndefinedMetric,
                "metric undefined on the full set; cannot bootstrap");
  }
  return EvaluatePlan(PlanResamples(metric, set, B, seed), metric, set);
}

double Quantile(std::span<const double> values, double q) {
  if (values.empty()) {
    throw Error(ErrorKind::kContract, "quantile of an empty sample");
  }
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<size_t>(std::floor(h));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double StudentTCdf(double t, double df) {
  if (!(df > 0.0)) {
    throw Error(ErrorKind::kContract, "t distribution needs df > 0");
  }
  if (std::isnan(t)) return t;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  // Lower tail mass beyond |t|: 0.5 * I_{df/(df+t^2)}(df/2, 1/2).
  const double x = df / (df + t * t);
  const double tail = 0.5 * boost::math::ibeta(0.5 * df, 0.5, x);
  return t < 0.0 ? tail : 1.0 - tail;
}

TTestResult PairedTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kShape, "paired t-test needs equal-length samples");
  }
  if (a.size() < 2) {
    throw Error(ErrorKind::kContract, "paired t-test needs n >= 2");
  }
  const size_t n = a.size();
  std::vector<double> d(n);
  for (size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) /
                      static_cast<double>(n);
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  TTestResult out;
  out.df = static_cast<int>(n - 1);
  out.mean_diff = mean;
  if (sd == 0.0) {
    if (mean == 0.0) {
      out.t = 0.0;
      out.p = 1.0;
    } else {
      out.t = std::copysign(std::numeric_limits<double>::infinity(), mean);
      out.p = 0.0;
      out.degenerate = true;
    }
    return out;
  }
  out.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const double df = static_cast<double>(out.df);
  out.p = boost::math::ibeta(0.5 * df, 0.5, df / (df + out.t * out.t));
  out.p = std::clamp(out.p, 0.0, 1.0);
  return out;
}

LogisticFit FitLogistic(const Eigen::MatrixXd& x, std::span<const int> y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (static_cast<size_t>(n) != y.size()) {
    throw Error(ErrorKind::kShape, "design matrix and response differ in length");
  }
  if (n <= p) {
    throw Error(ErrorKind::kRank, "logistic fit needs more records than columns");
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    const bool all_ones = (x.col(j).array() == 1.0).all();
    const bool constant = (x.col(j).array() == x(0, j)).all();
    if (constant && !all_ones) {
      throw Error(ErrorKind::kRank,
                  "predictor column " + std::to_string(j) + " is constant");
    }
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) {
    throw Error(ErrorKind::kRank, "design matrix is rank deficient");
  }
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y[static_cast<size_t>(i)] != 0 && y[static_cast<size_t>(i)] != 1) {
      throw Error(ErrorKind::kContract, "logistic response must be binary");
    }
    yv(i) = y[static_cast<size_t>(i)];
  }

  auto information = [&](const Eigen::VectorXd& beta, Eigen::VectorXd* mu) {
    *mu = (1.0 + (-(x * beta)).array().exp()).inverse().matrix();
    const Eigen::VectorXd w = mu->array() * (1.0 - mu->array());
    Eigen::MatrixXd info = x.transpose() * w.asDiagonal() * x;
    info.diagonal().array() += kIrlsRidge;
    return info;
  };

  LogisticFit fit;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd mu;
  for (int it = 1; it <= kIrlsMaxIterations; ++it) {
    const Eigen::MatrixXd info = information(beta, &mu);
    const Eigen::VectorXd score = x.transpose() * (yv - mu);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
      throw Error(ErrorKind::kRank, "information matrix is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(score);
    beta += step;
    fit.iterations = it;
    if (!beta.allFinite() || beta.cwiseAbs().maxCoeff() > kSeparationBound) {
      throw Error(ErrorKind::kSeparation,
                  "coefficients diverge (|beta| > 30): perfect separation");
    }
    if (step.cwiseAbs().maxCoeff() < kIrlsTolerance) {
      fit.converged = true;
      break;
    }
  }
  const Eigen::MatrixXd info = information(beta, &mu);
  const Eigen::MatrixXd cov =
      info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  fit.coefficients = beta;
  fit.standard_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.odds_ratios = beta.array().exp().matrix();
  fit.ci_low = (beta - kWaldZ * fit.standard_errors).array().exp().matrix();
  fit.ci_high = (beta + kWaldZ * fit.standard_errors).array().exp().matrix();
  return fit;
}

}  // namespace fairscl
