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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fairscl/error.hpp"
#include "fairscl/metrics.hpp"
#include "test_util.hpp"

namespace fairscl {
namespace {

using testing::BruteAuc;
using testing::BruteMarginalAuc;
using testing::MakeRandomScored;
using testing::ThrownKind;

ScoredSet TwoGroup(std::vector<double> s, std::vector<int> y,
                   std::vector<int> g) {
  return ScoredSet(std::move(s), std::move(y),
                   SubgroupView("g", {"A", "B"}, std::move(g)));
}

TEST(AucTest, Examples) {
  EXPECT_EQ(Auc(ScoredSet({0.9, 0.1}, {1, 0})), 1.0);
  EXPECT_EQ(Auc(ScoredSet({0.5, 0.5}, {1, 0})), 0.5);
  // Pairs (0.8,0.6) (0.8,0.2) (0.4,0.6) (0.4,0.2): 3 of 4 ordered.
  EXPECT_EQ(Auc(ScoredSet({0.8, 0.6, 0.4, 0.2}, {1, 0, 1, 0})), 0.75);
}

TEST(AucTest, SingleClassIsUndefined) {
  EXPECT_EQ(ThrownKind([] { Auc(ScoredSet({0.1, 0.2}, {1, 1})); }),
            ErrorKind::kUndefinedMetric);
  EXPECT_EQ(ThrownKind([] { Auc(ScoredSet({0.1, 0.2}, {0, 0})); }),
            ErrorKind::kUndefinedMetric);
}

TEST(ScoredSetTest, Contracts) {
  EXPECT_EQ(ThrownKind([] { ScoredSet({0.1}, {1, 0}); }), ErrorKind::kShape);
  EXPECT_EQ(ThrownKind([] { ScoredSet({NAN, 0.1}, {1, 0}); }), ErrorKind::kContract);
  EXPECT_EQ(ThrownKind([] { ScoredSet({0.2, 0.1}, {2, 0}); }), ErrorKind::kContract);
  EXPECT_EQ(ThrownKind([] { ScoredSet({0.2, 0.1}, {1, 0}).view(); }),
            ErrorKind::kContract);
}

TEST(MarginalAucTest, Examples) {
  const ScoredSet s = TwoGroup({0.9, 0.3, 0.7, 0.5}, {1, 0, 1, 0}, {0, 0, 1, 1});
  EXPECT_EQ(MarginalAuc(s, "A"), 1.0);
  EXPECT_EQ(MarginalAuc(s, "B"), 1.0);

  // A category whose single positive holds the top score.
  const ScoredSet t = TwoGroup({0.99, 0.2, 0.6, 0.7, 0.1}, {1, 0, 1, 0, 0},
                               {0, 1, 1, 1, 0});
  EXPECT_EQ(MarginalAuc(t, "A"), 1.0);
}

TEST(MarginalAucTest, NoPositiveNamesCategory) {
  const ScoredSet s = TwoGroup({0.9, 0.3, 0.7}, {1, 0, 0}, {0, 0, 1});
  try {
    MarginalAuc(s, "B");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUndefinedMetric);
    EXPECT_NE(std::string(e.what()).find("'B'"), std::string::npos) << e.what();
  }
}

TEST(MarginalAucTest, MatchesPairLoop) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    const int k = 2 + trial % 3;
    const auto r = MakeRandomScored(rng, 10 + trial % 150, k, trial % 2 == 0);
    const ScoredSet s = r.Set();
    const auto maucs = MarginalAucs(s);
    for (int g = 0; g < k; ++g) {
      EXPECT_NEAR(maucs[g], BruteMarginalAuc(r.scores, r.labels, r.groups, g), 1e-12);
    }
    EXPECT_NEAR(Auc(s), BruteAuc(r.scores, r.labels), 1e-12);
  }
}

TEST(MarginalAucTest, RankInvariance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = MakeRandomScored(rng, 60, 3, trial % 2 == 0);
    std::vector<double> cube;
    std::vector<double> affine;
    for (double v : r.scores) {
      cube.push_back(v * v * v);
      affine.push_back(2.0 * v + 1.0);
    }
    const ScoredSet s = r.Set();
    const ScoredSet sc(cube, r.labels, s.view());
    const ScoredSet sa(affine, r.labels, s.view());
    EXPECT_EQ(Auc(s), Auc(sc));
    EXPECT_EQ(Auc(s), Auc(sa));
    EXPECT_EQ(MarginalAucs(s), MarginalAucs(sc));
    EXPECT_EQ(MarginalAucs(s), MarginalAucs(sa));
  }
}

TEST(AucTest, ComplementSymmetry) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = MakeRandomScored(rng, 80, 2, false);
    std::vector<double> s2;
    std::vector<int> y2;
    for (size_t i = 0; i < r.scores.size(); ++i) {
      s2.push_back(1.0 - r.scores[i]);
      y2.push_back(1 - r.labels[i]);
    }
    EXPECT_NEAR(Auc(ScoredSet(r.scores, r.labels)), Auc(ScoredSet(s2, y2)), 1e-15);
  }
}

TEST(FairnessReportTest, PublishedAgeGap) {
  EXPECT_EQ(MaxMinGap(std::vector<double>{0.8288, 0.7289}), 0.8288 - 0.7289);
  EXPECT_NEAR(MaxMinGap(std::vector<double>{0.8288, 0.7289}), 0.0999, 1e-15);
}

TEST(FairnessReportTest, PerfectClassifier) {
  const ScoredSet s = TwoGroup({1, 0, 1, 0, 1, 0}, {1, 0, 1, 0, 1, 0},
                               {0, 0, 0, 1, 1, 1});
  const FairnessReport r = ComputeFairnessReport(s);
  for (const auto& [cat, g] : r.per_group) {
    EXPECT_EQ(g.tpr, 1.0) << cat;
    EXPECT_EQ(g.fpr, 0.0) << cat;
    EXPECT_EQ(g.bs, 0.0) << cat;
    EXPECT_EQ(g.mauc, 1.0) << cat;
  }
  EXPECT_EQ(r.deltas.d_mauc, 0.0);
  EXPECT_EQ(r.deltas.d_tpr, 0.0);
  EXPECT_EQ(r.deltas.d_fpr, 0.0);
  EXPECT_EQ(r.deltas.d_bs, 0.0);
}

// Twelve records, six per group, confusion tables counted by hand at 0.5.
//   A: y=1 scores 0.9 0.6 0.3 -> TP 2 FN 1; y=0 scores 0.7 0.2 0.1 -> FP 1 TN 2
//   B: y=1 scores 0.8 0.4     -> TP 1 FN 1; y=0 scores 0.5 0.45 0.2 0.0 -> FP 1 TN 3
TEST(FairnessReportTest, HandConfusionTables) {
  const ScoredSet s = TwoGroup(
      {0.9, 0.6, 0.3, 0.7, 0.2, 0.1, 0.8, 0.4, 0.5, 0.45, 0.2, 0.0},
      {1, 1, 1, 0, 0, 0, 1, 1, 0, 0, 0, 0},
      {0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1});
  const FairnessReport r = ComputeFairnessReport(s, 0.5);
  const GroupMetrics& a = r.per_group.at("A");
  const GroupMetrics& b = r.per_group.at("B");
  EXPECT_DOUBLE_EQ(a.tpr, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(a.fpr, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(b.tpr, 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(b.fpr, 1.0 / 4.0);
  EXPECT_EQ(a.n_pos, 3u);
  EXPECT_EQ(a.n_total, 6u);
  EXPECT_EQ(b.n_pos, 2u);
  EXPECT_EQ(b.n_total, 6u);

  const double bs_a = (0.01 + 0.16 + 0.49 + 0.49 + 0.04 + 0.01) / 6.0;
  const double bs_b = (0.04 + 0.36 + 0.25 + 0.2025 + 0.04 + 0.0) / 6.0;
  EXPECT_NEAR(a.bs, bs_a, 1e-15);
  EXPECT_NEAR(b.bs, bs_b, 1e-15);
  EXPECT_NEAR(r.deltas.d_tpr, 2.0 / 3.0 - 0.5, 1e-15);
  EXPECT_NEAR(r.deltas.d_fpr, 1.0 / 3.0 - 0.25, 1e-15);
  EXPECT_NEAR(r.deltas.d_bs, std::abs(bs_a - bs_b), 1e-15);

  // Negatives: 0.7 0.2 0.1 0.5 0.45 0.2 0.0.
  // mAUC of A: 0.9 beats 7, 0.6 beats 6, 0.3 beats 4 -> 17 / 21.
  // mAUC of B: 0.8 beats 7, 0.4 beats 4 -> 11 / 14.
  EXPECT_DOUBLE_EQ(a.mauc, 17.0 / 21.0);
  EXPECT_DOUBLE_EQ(b.mauc, 11.0 / 14.0);
  EXPECT_DOUBLE_EQ(r.deltas.d_mauc, 17.0 / 21.0 - 11.0 / 14.0);
}

TEST(FairnessReportTest, UndefinedRatesNameCategory) {
  // B has no negatives.
  const ScoredSet s = TwoGroup({0.9, 0.1, 0.8}, {1, 0, 1}, {0, 0, 1});
  try {
    ComputeFairnessReport(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kUndefinedMetric);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("'B'"), std::string::npos) << msg;
    EXPECT_NE(msg.find("FPR"), std::string::npos) << msg;
  }
  const ScoredSet out_of_range = TwoGroup({1.5, 0.1}, {1, 0}, {0, 1});
  EXPECT_EQ(ThrownKind([&] { ComputeFairnessReport(out_of_range); }),
            ErrorKind::kContract);
}

TEST(FairnessReportTest, Invariants) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto r = MakeRandomScored(rng, 120, 2 + trial % 3, trial % 3 == 0);
    const FairnessReport rep = ComputeFairnessReport(r.Set(), 0.5);
    std::vector<double> m, t, f, b;
    for (const auto& [cat, g] : rep.per_group) {
      EXPECT_GE(g.mauc, 0.0);
      EXPECT_LE(g.mauc, 1.0);
      EXPECT_GE(g.bs, 0.0);
      EXPECT_LE(g.bs, 1.0);
      m.push_back(g.mauc);
      t.push_back(g.tpr);
      f.push_back(g.fpr);
      b.push_back(g.bs);
    }
    auto gap = [](const std::vector<double>& v) {
      return *std::max_element(v.begin(), v.end()) - *std::min_element(v.begin(), v.end());
    };
    EXPECT_EQ(rep.deltas.d_mauc, gap(m));
    EXPECT_EQ(rep.deltas.d_tpr, gap(t));
    EXPECT_EQ(rep.deltas.d_fpr, gap(f));
    EXPECT_EQ(rep.deltas.d_bs, gap(b));
    EXPECT_GE(rep.deltas.d_mauc, 0.0);
  }
}

TEST(FairnessReportTest, SingleCategoryHasZeroGap) {
  const ScoredSet s({0.9, 0.2, 0.6, 0.4}, {1, 0, 1, 0},
                    SubgroupView("g", {"only"}, {0, 0, 0, 0}));
  EXPECT_EQ(ComputeFairnessReport(s).deltas.d_mauc, 0.0);
}

// Rows of the published relative change table that disagree with their own
// inputs. Hand arithmetic: -0.0021 / 0.8102, -0.0194 / 0.8288, -0.0037 / 0.0090.
TEST(RelativeChangeTest, InconsistentPublishedRows) {
  EXPECT_NEAR(ComputeRelativeChange(0.8102, 0.8081).absolute, -0.0021, 1e-12);
  EXPECT_NEAR(ComputeRelativeChange(0.8288, 0.8094).relative_pct_or_throw(),
              -100.0 * 0.0194 / 0.8288, 1e-9);
  EXPECT_NEAR(ComputeRelativeChange(0.0090, 0.0053).relative_pct_or_throw(),
              -100.0 * 0.0037 / 0.0090, 1e-9);
  EXPECT_NEAR(-100.0 * 0.0037 / 0.0090, -41.11, 0.01);
}

TEST(RelativeChangeTest, Examples) {
  const RelativeChange c = ComputeRelativeChange(0.0116, 0.0037);
  EXPECT_NEAR(c.relative_pct_or_throw(), -68.10, 0.01);
  EXPECT_NEAR(c.absolute, -0.0079, 1e-12);

  const RelativeChange same = ComputeRelativeChange(0.42, 0.42);
  EXPECT_EQ(same.absolute, 0.0);
  EXPECT_EQ(same.relative_pct_or_throw(), 0.0);

  const RelativeChange auc = ComputeRelativeChange(0.8167, 0.8085);
  EXPECT_NEAR(auc.relative_pct_or_throw(), -1.00, 0.1);
  EXPECT_NEAR(auc.absolute, -0.0082, 1e-12);

  const RelativeChange zero = ComputeRelativeChange(0.0, 0.3);
  EXPECT_EQ(zero.absolute, 0.3);
  EXPECT_FALSE(zero.relative_pct.has_value());
  EXPECT_EQ(ThrownKind([&] { zero.relative_pct_or_throw(); }),
            ErrorKind::kUndefinedMetric);
}

}  // namespace
}  // namespace fairscl
