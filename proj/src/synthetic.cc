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
#include <numeric>

#include "fairscl/dataset.hpp"
#include "fairscl/error.hpp"
#include "fairscl/random.hpp"

namespace fairscl {
namespace {

void Validate(const SyntheticConfig& c) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::kConfig, "synthetic config: " + msg);
  };
  if (c.n < 40) fail("n must be at least 40");
  if (c.categories.size() != 2) fail("exactly two categories are supported");
  if (c.categories[0] == c.categories[1]) fail("categories must differ");
  if (c.proportions.size() != 2 || c.prevalence.size() != 2) {
    fail("proportions and prevalence need one entry per category");
  }
  const double total =
      std::accumulate(c.proportions.begin(), c.proportions.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) fail("proportions must sum to 1");
  for (double p : c.proportions) {
    if (!(p >= 0.0 && p <= 1.0)) fail("proportions must lie in [0, 1]");
  }
  for (double p : c.prevalence) {
    if (!(p >= 0.0 && p <= 1.0)) fail("prevalence must lie in [0, 1]");
  }
  if (c.feature_dim < c.signal_dims + 1) {
    fail("feature_dim must exceed signal_dims (one nuisance feature)");
  }
  if (c.attribute.empty()) fail("attribute name is empty");
  if (!std::isfinite(c.signal_strength) || !std::isfinite(c.nuisance_strength)) {
    fail("signal strengths must be finite");
  }
}

}  // namespace

Dataset GenerateSynthetic(const SyntheticConfig& config, uint64_t seed) {
  Validate(config);
  RandomEngine rng(DeriveSeed(seed, "synthetic"));

  const auto n_first = static_cast<size_t>(
      std::llround(static_cast<double>(config.n) * config.proportions[0]));
  std::vector<int> group(config.n, 1);
  std::fill(group.begin(), group.begin() + static_cast<long>(n_first), 0);
  std::shuffle(group.begin(), group.end(), rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  const int width = static_cast<int>(std::to_string(config.n - 1).size());

  std::vector<Record> records;
  records.reserve(config.n);
  for (size_t i = 0; i < config.n; ++i) {
    const int g = group[i];
    Record rec;
    std::string digits = std::to_string(i);
    rec.id = "s" + std::string(static_cast<size_t>(width) - digits.size(), '0') +
             digits;
    rec.label = unit(rng) < config.prevalence[static_cast<size_t>(g)] ? 1 : 0;
    rec.groups.emplace(config.attribute,
                       config.categories[static_cast<size_t>(g)]);
    rec.features.resize(config.feature_dim);
    for (double& v : rec.features) v = noise(rng);
    const double label_sign = rec.label == 1 ? 1.0 : -1.0;
    for (size_t k = 0; k < config.signal_dims; ++k) {
      rec.features[k] += config.signal_strength * label_sign;
    }
    const double group_sign = g == 1 ? 1.0 : -1.0;
    rec.features[config.signal_dims] += config.nuisance_strength * group_sign;
    records.push_back(std::move(rec));
  }
  return Dataset::Create(std::move(records));
}

}  // namespace fairscl
