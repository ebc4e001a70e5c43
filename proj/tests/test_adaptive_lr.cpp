#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "feds3a/adaptive_lr.hpp"
#include "feds3a/error.hpp"

using namespace feds3a;

namespace {

// Three clients with the same participation count at different rounds.
ParticipationTracker three_clients() {
  ParticipationTracker t(3);
  t.record(0, 0);
  t.record(1, 0);
  t.record(0, 1);
  t.record(2, 1);
  t.record(1, 2);
  t.record(2, 3);
  return t;
}

std::vector<RoundWeightFunction> increasing() {
  return {RoundWeightFunction::logarithmic(), RoundWeightFunction::polynomial(0.5),
          RoundWeightFunction::exponential_smoothing(0.1),
          RoundWeightFunction::exponential(std::numbers::e / 2)};
}

}  // namespace

TEST(RoundWeight, ValuesUseOneBasedCount) {
  EXPECT_DOUBLE_EQ(RoundWeightFunction::constant()(9), 1.0);
  EXPECT_DOUBLE_EQ(RoundWeightFunction::logarithmic()(0), std::log(2.0));
  EXPECT_DOUBLE_EQ(RoundWeightFunction::polynomial(0.5)(2), 2.0);
  EXPECT_DOUBLE_EQ(RoundWeightFunction::exponential_smoothing(0.1)(1), 1.1 * 1.1);
  EXPECT_DOUBLE_EQ(RoundWeightFunction::exponential(2.0)(3), 16.0);
}

TEST(RoundWeight, Validation) {
  EXPECT_THROW(RoundWeightFunction::exponential(1.0).validate(), ConfigError);
  EXPECT_THROW(RoundWeightFunction::polynomial(0.0).validate(), ConfigError);
  EXPECT_NO_THROW(RoundWeightFunction::logarithmic().validate());
  EXPECT_THROW(RoundWeightFunction::parse("linear"), ConfigError);
}

TEST(Frequency, RecentParticipationCountsMore) {
  const auto t = three_clients();
  for (const auto& h : increasing()) {
    const auto f = frequency(t, h, 3);
    EXPECT_GT(f[2], f[1]) << RoundWeightFunction::name(h.kind());
    EXPECT_GT(f[1], f[0]) << RoundWeightFunction::name(h.kind());
    EXPECT_NEAR(f[0] + f[1] + f[2], 1.0, 1e-12);
  }
  const auto flat = frequency(t, RoundWeightFunction::constant(), 3);
  EXPECT_DOUBLE_EQ(flat[0], flat[2]);
}

TEST(Frequency, MatchesDirectSum) {
  const auto t = three_clients();
  const auto h = RoundWeightFunction::polynomial(0.5);
  const double w[] = {std::sqrt(2.0), std::sqrt(3.0), 2.0, std::sqrt(5.0)};  // (1 + n)^0.5, n = r + 1
  const double total = 2 * w[0] + 2 * w[1] + w[2] + w[3];
  const auto f = frequency(t, h, 3);
  EXPECT_NEAR(f[0], (w[0] + w[1]) / total, 1e-15);
  EXPECT_NEAR(f[1], (w[0] + w[2]) / total, 1e-15);
  EXPECT_NEAR(f[2], (w[1] + w[3]) / total, 1e-15);
}

TEST(Frequency, UniformBeforeAnyParticipation) {
  ParticipationTracker t(4);
  EXPECT_EQ(frequency(t, RoundWeightFunction::logarithmic(), 0), std::vector<double>(4, 0.25));
}

TEST(Frequency, FutureRoundIsLogicError) {
  ParticipationTracker t(1);
  t.record(0, 5);
  EXPECT_THROW(frequency(t, RoundWeightFunction::constant(), 4), std::logic_error);
}

TEST(Tracker, RepeatedRoundIgnoredDecreasingRejected) {
  ParticipationTracker t(1);
  t.record(0, 2);
  t.record(0, 2);
  EXPECT_EQ(t.rounds(0).size(), 1u);
  EXPECT_THROW(t.record(0, 1), std::logic_error);
}

TEST(Rate, EvenShareGetsGlobalRate) {
  EXPECT_DOUBLE_EQ(adaptive_rate(0.1, 1e-4, 10), 1e-4);
  EXPECT_DOUBLE_EQ(adaptive_rate(0.05, 1e-4, 10), 2e-4);
}

TEST(Rate, ClampAndZeroFloor) {
  EXPECT_DOUBLE_EQ(adaptive_rate(0.9, 1.0, 10), 0.111111111111111111);
  EXPECT_DOUBLE_EQ(adaptive_rate(1.0, 1.0, 100), 0.1);   // raw 0.01
  EXPECT_DOUBLE_EQ(adaptive_rate(1e-6, 1.0, 10), 10.0);  // raw 100
  EXPECT_DOUBLE_EQ(adaptive_rate(0.0, 1.0, 10), 10.0);   // floored to 1/(10 M) -> 10
  EXPECT_DOUBLE_EQ(raw_adaptive_rate(0.01, 1.0, 10), 10.0);
  EXPECT_THROW(adaptive_rate(0.1, 0.0, 10), ConfigError);
}
