#include <gtest/gtest.h>

#include "feds3a/metrics.hpp"

using namespace feds3a;

TEST(Metrics, TwoClassByHand) {
  const ConfusionMatrix conf(2, {50, 10, 5, 35});
  const auto m = weighted_metrics(conf);
  ASSERT_EQ(m.per_class.size(), 2u);
  const auto& c0 = m.per_class[0];
  const auto& c1 = m.per_class[1];
  EXPECT_DOUBLE_EQ(c0.precision, 50.0 / 55.0);
  EXPECT_DOUBLE_EQ(c0.recall, 50.0 / 60.0);
  EXPECT_DOUBLE_EQ(c0.f1, 100.0 / 115.0);
  EXPECT_DOUBLE_EQ(c0.fpr, 5.0 / 40.0);
  EXPECT_DOUBLE_EQ(c1.precision, 35.0 / 45.0);
  EXPECT_DOUBLE_EQ(c1.recall, 35.0 / 40.0);
  EXPECT_DOUBLE_EQ(c1.f1, 70.0 / 85.0);
  EXPECT_DOUBLE_EQ(c1.fpr, 10.0 / 60.0);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.85);
  EXPECT_NEAR(m.precision, 0.6 * 50.0 / 55.0 + 0.4 * 35.0 / 45.0, 1e-15);
  EXPECT_NEAR(m.recall, 0.6 * 50.0 / 60.0 + 0.4 * 35.0 / 40.0, 1e-15);
  EXPECT_NEAR(m.f1, 0.6 * 100.0 / 115.0 + 0.4 * 70.0 / 85.0, 1e-15);
  EXPECT_NEAR(m.fpr, 0.6 * 5.0 / 40.0 + 0.4 * 10.0 / 60.0, 1e-15);
  EXPECT_FALSE(m.zero_division);
}

TEST(Metrics, PerfectDiagonal) {
  const ConfusionMatrix conf(3, {4, 0, 0, 0, 7, 0, 0, 0, 9});
  const auto m = weighted_metrics(conf);
  EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 1.0);
  EXPECT_DOUBLE_EQ(m.f1, 1.0);
  EXPECT_DOUBLE_EQ(m.fpr, 0.0);
}

TEST(Metrics, SingleClassPredictorFlagsZeroDivision) {
  // Everything predicted as class 0 with balanced supports.
  const ConfusionMatrix conf(4, {5, 0, 0, 0, 5, 0, 0, 0, 5, 0, 0, 0, 5, 0, 0, 0});
  const auto m = weighted_metrics(conf);
  EXPECT_DOUBLE_EQ(m.recall, 0.25);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.25);
  EXPECT_TRUE(m.zero_division);
}

TEST(Confusion, CountsAndShapeChecks) {
  ConfusionMatrix conf(2);
  conf.add(0, 1, 3);
  conf.add(1, 1);
  EXPECT_EQ(conf.total(), 4u);
  EXPECT_EQ(conf.trace(), 1u);
  EXPECT_EQ(conf.support(0), 3u);
  EXPECT_THROW(ConfusionMatrix(2, {1, 2, 3}), std::exception);
}
