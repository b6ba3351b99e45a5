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

// Bootstrap confidence intervals, paired t-tests and logistic regression.

#ifndef FAIRSCL_STATS_HPP_
#define FAIRSCL_STATS_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fairscl/metrics.hpp"

namespace fairscl {

using MetricFn = std::function<double(const ScoredSet&)>;

inline constexpr size_t kDefaultBootstrapReplicates = 200;
// Undefined resamples tolerated per requested replicate.
inline constexpr size_t kMaxRedrawsPerReplicate = 50;

// With-replacement resample indices, one vector per replicate. Sharing a plan
// across methods scored on the same records makes their replicates paired.
struct ResamplePlan {
  uint64_t seed = 0;
  size_t n = 0;
  std::vector<std::vector<size_t>> indices;
  size_t redraws = 0;

  size_t replicates() const { return indices.size(); }
  // FNV-1a over the replicate's indices, for pairing audits.
  uint64_t IndexHash(size_t b) const;
};

// Draws B resamples of `set`. A resample on which `metric` throws
// kUndefinedMetric is redrawn; more than kMaxRedrawsPerReplicate * B redraws
// raise kBootstrapInfeasible. Replicate b draws from its own stream seeded
// with DeriveSeed(seed, b), so the plan does not depend on evaluation order.
ResamplePlan PlanResamples(const MetricFn& metric, const ScoredSet& set,
                           size_t B, uint64_t seed);

struct BootstrapResult {
  double point = 0.0;
  std::vector<double> replicates;
  double ci_low = 0.0;
  double ci_high = 0.0;
  size_t B = 0;
  uint64_t seed = 0;
  size_t redraws = 0;
};

// Evaluates `metric` on the full set and on every resample of `plan`. Throws
// kUndefinedMetric if the metric is undefined on a planned resample.
BootstrapResult EvaluatePlan(const ResamplePlan& plan, const MetricFn& metric,
                             const ScoredSet& set);

// PlanResamples followed by EvaluatePlan. Requires B >= 2.
BootstrapResult Bootstrap(const MetricFn& metric, const ScoredSet& set,
                          size_t B, uint64_t seed);

// Linear-interpolation quantile (sample quantile type 7) of `values`.
double Quantile(std::span<const double> values, double q);

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  int df = 0;
  double mean_diff = 0.0;
  // Set when sd(a - b) = 0 but the mean difference is not.
  bool degenerate = false;
};

// Two-sided paired t-test on d = a - b. Requires equal lengths n >= 2.
TTestResult PairedTTest(std::span<const double> a, std::span<const double> b);

// CDF of Student's t with `df` degrees of freedom.
double StudentTCdf(double t, double df);

// Logistic regression fit by IRLS.
struct LogisticFit {
  Eigen::VectorXd coefficients;
  Eigen::VectorXd standard_errors;
  Eigen::VectorXd odds_ratios;
  Eigen::VectorXd ci_low;   // OR scale
  Eigen::VectorXd ci_high;  // OR scale
  bool converged = false;
  int iterations = 0;
};

inline constexpr int kIrlsMaxIterations = 100;
inline constexpr double kIrlsTolerance = 1e-8;
inline constexpr double kIrlsRidge = 1e-10;
inline constexpr double kSeparationBound = 30.0;
inline constexpr double kWaldZ = 1.96;

// `x` carries its own intercept column. Throws kRank when `x` is rank
// deficient (including a constant predictor besides the intercept) or n <= p,
// and kSeparation when a coefficient exceeds kSeparationBound in magnitude.
LogisticFit FitLogistic(const Eigen::MatrixXd& x, std::span<const int> y);

}  // namespace fairscl

#endif  // FAIRSCL_STATS_HPP_
