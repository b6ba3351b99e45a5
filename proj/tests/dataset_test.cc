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

#include <cstdio>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "fairscl/dataset.hpp"
#include "fairscl/error.hpp"
#include "fairscl/stats.hpp"
#include "test_util.hpp"

namespace fairscl {
namespace {

using testing::MakeDataset;
using testing::Slurp;
using testing::TempDir;
using testing::ThrownKind;

void WriteFile(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

TEST(IngestTest, SmallTable) {
  const auto dir = TempDir("ingest_small");
  WriteFile(dir / "t.csv",
            "id,label,sex,f0,f1\n"
            "a,1,M,0.5,1\n"
            "b,0,F,-2,3.25\n"
            "c,1,F,1e-3,0\n"
            "d,0,M,7,8\n");
  const Dataset ds = IngestTable(dir / "t.csv");
  EXPECT_EQ(ds.size(), 4u);
  EXPECT_EQ(ds.feature_dim(), 2u);
  ASSERT_EQ(ds.attributes().size(), 1u);
  EXPECT_EQ(ds.attribute("sex").categories, (std::vector<std::string>{"F", "M"}));
  EXPECT_TRUE(ds.attribute("sex").usable());
  EXPECT_EQ(ds.records()[1].id, "b");
  EXPECT_DOUBLE_EQ(ds.features()(1, 1), 3.25);
  EXPECT_EQ(ds.labels(), (std::vector<int>{1, 0, 1, 0}));
}

TEST(IngestTest, NonBinaryLabelNamesRow) {
  const auto dir = TempDir("ingest_label");
  WriteFile(dir / "t.csv", "id,label,sex,f0\na,1,M,0\nb,2,F,1\n");
  try {
    IngestTable(dir / "t.csv");
    FAIL() << "expected a validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(IngestTest, ErrorKinds) {
  const auto dir = TempDir("ingest_errors");
  WriteFile(dir / "num.csv", "id,label,sex,f0\na,1,M,abc\nb,0,F,1\n");
  EXPECT_EQ(ThrownKind([&] { IngestTable(dir / "num.csv"); }), ErrorKind::kParse);

  WriteFile(dir / "dup.csv", "id,label,sex,f0\na,1,M,0\na,0,F,1\n");
  EXPECT_EQ(ThrownKind([&] { IngestTable(dir / "dup.csv"); }),
            ErrorKind::kValidation);

  WriteFile(dir / "miss.csv", "id,label,sex,f0\na,1,,0\nb,0,F,1\n");
  EXPECT_EQ(ThrownKind([&] { IngestTable(dir / "miss.csv"); }),
            ErrorKind::kValidation);

  TableSchema schema;
  schema.group_columns = {"race"};
  schema.feature_columns = {"f0"};
  WriteFile(dir / "col.csv", "id,label,sex,f0\na,1,M,0\n");
  EXPECT_EQ(ThrownKind([&] { IngestTable(dir / "col.csv", schema); }),
            ErrorKind::kSchema);

  EXPECT_EQ(ThrownKind([&] { IngestTable(dir / "absent.csv"); }), ErrorKind::kIo);
}

TEST(IngestTest, SingleCategoryAttributeIsUnusable) {
  const Dataset ds = MakeDataset({{0}, {1}}, {0, 1}, {"A", "A"});
  EXPECT_FALSE(ds.attribute("group").usable());
}

// Per-category counts against a recount of the raw file by awk.
TEST(IngestTest, CountsMatchAwkRecount) {
  const auto dir = TempDir("ingest_awk");
  const auto path = dir / "big.csv";
  {
    std::ofstream out(path);
    out << "id,label,sex,race,age,f0,f1\n";
    std::mt19937_64 rng(7);
    const char* sexes[] = {"F", "M"};
    const char* races[] = {"Black", "Other", "White"};
    const char* ages[] = {"<75", ">=75"};
    for (int i = 0; i < 1000; ++i) {
      out << "r" << i << ',' << rng() % 2 << ',' << sexes[rng() % 2] << ','
          << races[rng() % 3] << ',' << ages[rng() % 2] << ','
          << static_cast<double>(rng() % 1000) / 7.0 << ",1\n";
    }
  }
  const Dataset ds = IngestTable(path);
  ASSERT_EQ(ds.size(), 1000u);
  const std::vector<std::pair<std::string, int>> columns = {
      {"sex", 3}, {"race", 4}, {"age", 5}};
  for (const auto& [attr, col] : columns) {
    std::map<std::string, size_t> ours;
    for (const Record& r : ds.records()) ++ours[r.groups.at(attr)];

    const std::string cmd = "awk -F, 'NR>1{c[$" + std::to_string(col) +
                            "]++} END{for(k in c) print k, c[k]}' '" +
                            path.string() + "'";
    FILE* pipe = popen(cmd.c_str(), "r");
    ASSERT_NE(pipe, nullptr);
    std::map<std::string, size_t> theirs;
    char name[64];
    size_t count = 0;
    while (std::fscanf(pipe, "%63s %zu", name, &count) == 2) theirs[name] = count;
    pclose(pipe);
    EXPECT_EQ(ours, theirs) << attr;
  }
}

TEST(DatasetTest, ViewsPartitionRecords) {
  std::vector<std::vector<double>> f;
  std::vector<int> y;
  std::vector<std::string> g;
  for (int i = 0; i < 300; ++i) {
    f.push_back({static_cast<double>(i)});
    y.push_back(i % 3 == 0 ? 1 : 0);
    g.push_back(std::string(1, static_cast<char>('A' + (i * 7) % 3)));
  }
  const Dataset ds = MakeDataset(f, y, g);
  const SubgroupView v = ds.View("group");
  std::vector<int> cover(ds.size(), 0);
  for (const auto& c : v.categories()) {
    const auto mask = v.Mask(c);
    for (size_t i = 0; i < mask.size(); ++i) cover[i] += mask[i] ? 1 : 0;
  }
  for (int c : cover) EXPECT_EQ(c, 1);
  EXPECT_EQ(v.categories(), (std::vector<std::string>{"A", "B", "C"}));
}

TEST(DatasetTest, ValidationErrors) {
  EXPECT_EQ(ThrownKind([] { MakeDataset({{0}, {1, 2}}, {0, 1}, {"A", "B"}); }),
            ErrorKind::kValidation);
  EXPECT_EQ(ThrownKind([] {
              MakeDataset({{0}, {std::nan("")}}, {0, 1}, {"A", "B"});
            }),
            ErrorKind::kValidation);
  EXPECT_EQ(ThrownKind([] { MakeDataset({{0}, {1}}, {0, 3}, {"A", "B"}); }),
            ErrorKind::kValidation);
}

TEST(SyntheticTest, DeterministicAndSized) {
  SyntheticConfig cfg;
  const Dataset a = GenerateSynthetic(cfg, 11);
  const Dataset b = GenerateSynthetic(cfg, 11);
  EXPECT_EQ(a, b);
  EXPECT_EQ(std::memcmp(a.features().data(), b.features().data(),
                        sizeof(double) * a.features().size()),
            0);
  EXPECT_NE(a, GenerateSynthetic(cfg, 12));

  cfg.n = 1001;
  cfg.proportions = {0.3, 0.7};
  const Dataset c = GenerateSynthetic(cfg, 1);
  const auto mask = c.View("group").Mask("A");
  const double count = static_cast<double>(std::count(mask.begin(), mask.end(), true));
  EXPECT_LE(std::abs(count - 0.3 * 1001), 1.0);
}

TEST(SyntheticTest, ConfigErrors) {
  SyntheticConfig cfg;
  cfg.proportions = {0.5, 0.6};
  EXPECT_EQ(ThrownKind([&] { GenerateSynthetic(cfg, 0); }), ErrorKind::kConfig);
  cfg = {};
  cfg.n = 39;
  EXPECT_EQ(ThrownKind([&] { GenerateSynthetic(cfg, 0); }), ErrorKind::kConfig);
}

// Without the nuisance shift and with equal prevalence, group membership
// carries no information about the label.
TEST(SyntheticTest, NoInjectedAssociation) {
  SyntheticConfig cfg;
  cfg.nuisance_strength = 0.0;
  cfg.prevalence = {0.45, 0.45};
  const Dataset ds = GenerateSynthetic(cfg, 5);
  const auto mask = ds.View("group").Mask("B");
  Eigen::MatrixXd x(ds.size(), 2);
  for (size_t i = 0; i < ds.size(); ++i) {
    x(static_cast<Eigen::Index>(i), 0) = 1.0;
    x(static_cast<Eigen::Index>(i), 1) = mask[i] ? 1.0 : 0.0;
  }
  const LogisticFit fit = FitLogistic(x, ds.labels());
  EXPECT_GE(fit.odds_ratios(1), 0.8);
  EXPECT_LE(fit.odds_ratios(1), 1.25);
}

std::map<std::string, size_t> CountBy(const Dataset& ds, const std::string& attr) {
  std::map<std::string, size_t> out;
  for (const Record& r : ds.records()) ++out[r.groups.at(attr)];
  return out;
}

std::string BaseId(const std::string& id) {
  return id.substr(0, id.find(kResampleIdSeparator));
}

TEST(BalancedResampleTest, AlreadyBalancedIsUnchanged) {
  const Dataset ds = MakeDataset({{0}, {1}, {2}, {3}, {4}, {5}}, {0, 1, 0, 1, 0, 1},
                                 {"A", "A", "A", "B", "B", "B"});
  EXPECT_EQ(BalancedResample(ds, "group", 9), ds);
}

TEST(BalancedResampleTest, UpsamplesSingleRecord) {
  const Dataset ds = MakeDataset({{0}, {1}, {2}, {3}}, {0, 1, 0, 1},
                                 {"A", "A", "A", "B"});
  const Dataset out = BalancedResample(ds, "group", 1);
  EXPECT_EQ(CountBy(out, "group"), (std::map<std::string, size_t>{{"A", 3}, {"B", 3}}));
  for (const Record& r : out.records()) {
    if (r.groups.at("group") == "B") EXPECT_EQ(BaseId(r.id), "r3");
  }
}

TEST(BalancedResampleTest, ThreeCategories) {
  std::vector<std::vector<double>> f;
  std::vector<int> y;
  std::vector<std::string> g;
  const std::vector<std::pair<std::string, int>> sizes = {{"A", 120}, {"B", 30}, {"C", 50}};
  int i = 0;
  for (const auto& [name, count] : sizes) {
    for (int k = 0; k < count; ++k, ++i) {
      f.push_back({static_cast<double>(i)});
      y.push_back(i % 2);
      g.push_back(name);
    }
  }
  const Dataset ds = MakeDataset(f, y, g);
  const Dataset out = BalancedResample(ds, "group", 4);
  EXPECT_EQ(CountBy(out, "group"),
            (std::map<std::string, size_t>{{"A", 120}, {"B", 120}, {"C", 120}}));

  // Distinct base ids per category are exactly the originals, and copies keep
  // features, label and groups.
  std::map<std::string, Record> originals;
  for (const Record& r : ds.records()) originals[r.id] = r;
  std::map<std::string, std::set<std::string>> before;
  std::map<std::string, std::set<std::string>> after;
  for (const Record& r : ds.records()) before[r.groups.at("group")].insert(r.id);
  for (const Record& r : out.records()) {
    const std::string base = BaseId(r.id);
    after[r.groups.at("group")].insert(base);
    const Record& o = originals.at(base);
    EXPECT_EQ(r.features, o.features);
    EXPECT_EQ(r.label, o.label);
    EXPECT_EQ(r.groups, o.groups);
  }
  EXPECT_EQ(before, after);
  for (size_t k = 0; k < ds.size(); ++k) EXPECT_EQ(out.records()[k], ds.records()[k]);
  EXPECT_EQ(out, BalancedResample(ds, "group", 4));
}

TEST(BalancedResampleTest, UnusableAttribute) {
  const Dataset ds = MakeDataset({{0}, {1}}, {0, 1}, {"A", "A"});
  EXPECT_EQ(ThrownKind([&] { BalancedResample(ds, "group", 0); }),
            ErrorKind::kConfig);
}

TEST(SplitTest, SizesAndPartition) {
  std::vector<std::vector<double>> f;
  std::vector<int> y;
  std::vector<std::string> g;
  for (int i = 0; i < 10; ++i) {
    f.push_back({static_cast<double>(i)});
    y.push_back(i % 2);
    g.push_back(i < 5 ? "A" : "B");
  }
  const Dataset ds = MakeDataset(f, y, g);
  const auto [train, test] = Split(ds, 0.2, 3);
  EXPECT_EQ(train.size(), 8u);
  EXPECT_EQ(test.size(), 2u);
  std::set<std::string> ids;
  for (const Record& r : train.records()) ids.insert(r.id);
  for (const Record& r : test.records()) EXPECT_TRUE(ids.insert(r.id).second);
  EXPECT_EQ(ids.size(), 10u);

  EXPECT_EQ(ThrownKind([&] { Split(ds, 0.0, 0); }), ErrorKind::kConfig);
  EXPECT_EQ(ThrownKind([&] { Split(ds, 1.0, 0); }), ErrorKind::kConfig);
}

TEST(SplitTest, SeedsGiveDistinctTestSets) {
  const Dataset ds = GenerateSynthetic({.n = 200}, 0);
  std::set<std::set<std::string>> seen;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const auto [train, test] = Split(ds, 0.2, seed);
    std::set<std::string> ids;
    for (const Record& r : test.records()) ids.insert(r.id);
    seen.insert(ids);
    EXPECT_EQ(Split(ds, 0.2, seed).second, test);
  }
  EXPECT_GE(seen.size(), 19u);
}

TEST(EmitTableTest, RoundTripIsBitExact) {
  const auto dir = TempDir("emit");
  SyntheticConfig cfg;
  cfg.n = 400;
  const Dataset ds = GenerateSynthetic(cfg, 21);
  EmitTable(ds, dir / "d.csv");
  const Dataset back = IngestTable(dir / "d.csv");
  EXPECT_EQ(back, ds);
  ASSERT_EQ(back.features().size(), ds.features().size());
  EXPECT_EQ(std::memcmp(back.features().data(), ds.features().data(),
                        sizeof(double) * ds.features().size()),
            0);
  const std::string text = Slurp(dir / "d.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "id,label,group,f0,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12,f13,f14,f15");
}

TEST(EmitTableTest, GroupColumnsSortedAndQuoted) {
  const auto dir = TempDir("emit_quote");
  std::vector<Record> recs(2);
  recs[0] = {"x,1", {0.1}, 1, {{"sex", "F"}, {"age", "<75"}}};
  recs[1] = {"y\"2", {1.0 / 3.0}, 0, {{"sex", "M"}, {"age", ">=75"}}};
  const Dataset ds = Dataset::Create(recs);
  EmitTable(ds, dir / "q.csv");
  const std::string text = Slurp(dir / "q.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "id,label,age,sex,f0");
  EXPECT_EQ(IngestTable(dir / "q.csv"), ds);
}

}  // namespace
}  // namespace fairscl
