#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "feds3a/data.hpp"
#include "feds3a/error.hpp"

using namespace feds3a;

namespace {

const std::filesystem::path kFixtures = FEDS3A_FIXTURE_DIR;

std::vector<std::size_t> all_rows(const Dataset& d) {
  std::vector<std::size_t> v(d.size());
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

TEST(Csv, LoadsFixtureAndCountsDrops) {
  const auto csv = load_csv(kFixtures / "toy10.csv");
  EXPECT_EQ(csv.report.rows_read, 10u);
  EXPECT_EQ(csv.report.dropped_malformed, 2u);  // "abc" and a short row
  EXPECT_EQ(csv.report.dropped_nonfinite, 1u);
  EXPECT_EQ(csv.report.dropped_class, 1u);
  ASSERT_EQ(csv.data.size(), 6u);
  EXPECT_EQ(csv.data.feature_dim(), 2u);
  const auto names = default_ids_classes();
  EXPECT_EQ(csv.data.class_names[static_cast<std::size_t>(csv.data.labels[0])], "BENIGN");
  EXPECT_EQ(csv.data.class_names[static_cast<std::size_t>(csv.data.labels[3])], "PortScan");  // lowercase in file
  EXPECT_DOUBLE_EQ(csv.data.features(1, 0), 4500.0);
}

TEST(Csv, UnknownColumnIsSchemaError) {
  CsvSchema schema;
  schema.label_column = "Attack";
  EXPECT_THROW(load_csv(kFixtures / "toy10.csv", schema), SchemaError);
  CsvSchema cols;
  cols.feature_columns = {"Flow Duration", "Bwd Packets"};
  EXPECT_THROW(load_csv(kFixtures / "toy10.csv", cols), SchemaError);
}

TEST(Csv, MissingFileIsIoError) {
  EXPECT_THROW(load_csv(kFixtures / "absent.csv"), IoError);
}

TEST(Entropy, DegenerateCases) {
  const std::vector<std::size_t> single = {0, 40, 0};
  EXPECT_EQ(shannon_entropy(single, 3), 0.0);
  const std::vector<std::size_t> uniform = {5, 5, 5, 5};
  EXPECT_NEAR(shannon_entropy(uniform, 4), 1.0, 1e-15);
}

TEST(Entropy, ShippedQuotaTablesMatchReferenceEntropies) {
  // Reference per-client entropies of the two 10-client scenarios.
  const double basic[] = {0.5981, 0.1794, 0.4880, 0.1423, 0.4729, 0.5054, 0.4043, 0.0, 0.6062, 0.3681};
  const auto names = default_ids_classes();
  const auto b = load_quota_csv(shipped_quota_path("basic"), names);
  ASSERT_EQ(b.clients(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(shannon_entropy(b.counts[i], kQuotaEntropyClasses), basic[i], 1e-3) << i;
  const auto bal = load_quota_csv(shipped_quota_path("balanced"), names);
  ASSERT_EQ(bal.clients(), 10u);
  for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(shannon_entropy(bal.counts[i], kQuotaEntropyClasses), 0.6553, 1e-3) << i;
  EXPECT_EQ(std::accumulate(b.counts[0].begin(), b.counts[0].end(), std::size_t{0}), 78357u);
}

TEST(Quota, OverdrawnClassNamesTheClass) {
  SyntheticSpec s;
  s.classes = 2;
  s.per_class = 10;
  s.feature_dim = 2;
  const Dataset d = make_synthetic(s);
  QuotaTable q;
  q.class_names = {"class0", "class1"};
  q.counts = {{5, 5}, {3, 8}};
  try {
    partition_by_quota(d, all_rows(d), q, 0.05, 1);
    FAIL() << "expected PartitionError";
  } catch (const PartitionError& e) {
    EXPECT_NE(std::string(e.what()).find(d.class_names[1]), std::string::npos) << e.what();
  }
}

TEST(Quota, ClientsGetExactCounts) {
  SyntheticSpec s;
  s.classes = 2;
  s.per_class = 100;
  s.feature_dim = 2;
  const Dataset d = make_synthetic(s);
  QuotaTable q;
  q.class_names = d.class_names;
  q.counts = {{30, 10}, {0, 45}};
  const auto part = partition_by_quota(d, all_rows(d), q, 0.05, 9);
  EXPECT_EQ(part.histograms[0], (std::vector<std::size_t>{30, 10}));
  EXPECT_EQ(part.histograms[1], (std::vector<std::size_t>{0, 45}));
  std::set<std::size_t> seen;
  for (const auto& c : part.clients) seen.insert(c.begin(), c.end());
  for (auto r : part.server) EXPECT_TRUE(seen.insert(r).second) << "server row shared with a client";
  // 85 client rows -> server holds 5% of the training data: 85 * 0.05 / 0.95
  EXPECT_NEAR(static_cast<double>(part.server.size()), 85 * 0.05 / 0.95, 1.0);
}

TEST(Dirichlet, DisjointNonEmptyDeterministic) {
  SyntheticSpec s;
  s.classes = 3;
  s.per_class = 2000;
  s.feature_dim = 4;
  const Dataset d = make_synthetic(s);
  DirichletPartitionConfig cfg;
  cfg.seed = 17;
  const auto a = partition_dirichlet(d, all_rows(d), cfg);
  const auto b = partition_dirichlet(d, all_rows(d), cfg);
  EXPECT_EQ(a.clients, b.clients);
  EXPECT_EQ(a.server, b.server);
  ASSERT_EQ(a.clients.size(), 10u);
  std::set<std::size_t> seen(a.server.begin(), a.server.end());
  std::size_t client_rows = 0;
  for (const auto& c : a.clients) {
    EXPECT_GE(c.size(), 1u);
    client_rows += c.size();
    for (auto r : c) EXPECT_TRUE(seen.insert(r).second);
  }
  EXPECT_EQ(seen.size(), d.size());
  EXPECT_NEAR(static_cast<double>(a.server.size()) / d.size(), 0.05, 0.005);
  // Geometric sizes: largest over smallest close to the configured ratio.
  std::size_t lo = SIZE_MAX, hi = 0;
  for (const auto& c : a.clients) {
    lo = std::min(lo, c.size());
    hi = std::max(hi, c.size());
  }
  EXPECT_NEAR(static_cast<double>(hi) / static_cast<double>(lo), cfg.size_ratio, 0.5);
}

TEST(Synthetic, CentresArePairwiseSeparated) {
  SyntheticSpec s;
  s.classes = 3;
  s.per_class = 4000;
  s.feature_dim = 5;
  s.separation = 8.0;
  const Dataset d = make_synthetic(s);
  std::vector<std::vector<double>> mean(3, std::vector<double>(5, 0.0));
  for (std::size_t r = 0; r < d.size(); ++r) {
    for (std::size_t j = 0; j < 5; ++j) mean[static_cast<std::size_t>(d.labels[r])][j] += d.features(r, j) / 4000.0;
  }
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = a + 1; b < 3; ++b) {
      double dist = 0.0;
      for (std::size_t j = 0; j < 5; ++j) dist += (mean[a][j] - mean[b][j]) * (mean[a][j] - mean[b][j]);
      EXPECT_NEAR(std::sqrt(dist), 8.0, 0.15);
    }
  }
}

TEST(Split, StratifiedAndDisjoint) {
  SyntheticSpec s;
  s.classes = 3;
  s.per_class = 100;
  s.feature_dim = 3;
  const Dataset d = make_synthetic(s);
  const auto split = stratified_split(d, 0.1, 4);
  EXPECT_EQ(split.train.size() + split.test.size(), d.size());
  std::vector<int> per_class(3, 0);
  for (auto r : split.test) ++per_class[static_cast<std::size_t>(d.labels[r])];
  for (int c : per_class) EXPECT_EQ(c, 10);
  std::set<std::size_t> all(split.train.begin(), split.train.end());
  for (auto r : split.test) EXPECT_TRUE(all.insert(r).second);
}

TEST(Standardizer, ConstantColumnKeepsUnitScale) {
  Matrix m(3, 2);
  m(0, 0) = 1;
  m(1, 0) = 2;
  m(2, 0) = 3;
  m(0, 1) = m(1, 1) = m(2, 1) = 7;
  const std::vector<std::size_t> rows = {0, 1, 2};
  const auto st = Standardizer::fit(m, rows);
  st.apply(m);
  EXPECT_DOUBLE_EQ(m(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(m(0, 1), 0.0);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_TRUE(std::isfinite(m(r, 1)));
}
