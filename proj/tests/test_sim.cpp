#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "feds3a/error.hpp"
#include "feds3a/sim.hpp"
#include "worked_trace.hpp"

using namespace feds3a;

namespace {

ExperimentConfig small_synthetic() {
  ExperimentConfig cfg;
  cfg.synthetic_per_class = 400;
  cfg.synthetic_features = 4;
  cfg.hidden_layers = {8};
  cfg.clients = 5;
  cfg.participation = 0.6;
  cfg.rounds = 4;
  cfg.server_fraction = 0.2;
  cfg.learning_rate = 1e-2;
  cfg.server_epochs = 2;
  cfg.sw_beta = 0.25;
  cfg.groups = 2;
  return cfg;
}

}  // namespace

TEST(WorkedTrace, ParticipantsAndGapsPerRound) {
  const auto res = simulate(trace::worked_trace_config(), trace::worked_trace_inputs());
  ASSERT_EQ(res.rounds.size(), 4u);
  for (std::size_t r = 0; r < 4; ++r) {
    EXPECT_EQ(res.rounds[r].participants, trace::kTraceParticipants[r]) << "round " << r;
    EXPECT_EQ(res.rounds[r].post_gaps, trace::kTracePostGaps[r]) << "round " << r;
  }
  // Client 5 reaches a gap of 3 in the third round and is forced to update.
  EXPECT_EQ(res.rounds[2].staleness[4], 3);
  EXPECT_EQ(res.rounds[2].forced, (std::vector<std::size_t>{4}));
  for (std::size_t r : {0u, 1u, 3u}) EXPECT_TRUE(res.rounds[r].forced.empty());
  EXPECT_EQ(res.rounds[3].gaps, (std::vector<long>{0, 1}));
  EXPECT_EQ(res.participation[0], (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(res.participation[1], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(res.participation[2], (std::vector<std::size_t>{1, 3}));
  EXPECT_DOUBLE_EQ(res.rounds[3].end_time, 3.7);
}

TEST(Protocol, FullParticipationZeroToleranceIsSynchronous) {
  auto cfg = trace::worked_trace_config();
  cfg.participation = 1.0;
  cfg.staleness_tolerance = 0;
  cfg.rounds = 3;
  auto in = trace::worked_trace_inputs();
  in.duration_override = [](std::size_t c, std::size_t) { return 1.0 + static_cast<double>(c); };
  const auto res = simulate(cfg, in);
  for (const auto& led : res.rounds) {
    EXPECT_EQ(led.participants.size(), 5u);
    EXPECT_EQ(led.post_gaps, std::vector<long>(5, 0));
    for (long g : led.gaps) EXPECT_EQ(g, 0);
  }
}

TEST(Protocol, QuorumOfOneTakesEarliestUpload) {
  auto cfg = trace::worked_trace_config();
  cfg.participation = 0.2;
  auto in = trace::worked_trace_inputs();
  in.duration_override = [](std::size_t c, std::size_t) { return c == 3 ? 0.5 : 2.0; };
  const auto res = simulate(cfg, in);
  EXPECT_EQ(res.rounds[0].participants, (std::vector<std::size_t>{3}));
}

TEST(Protocol, StalenessNeverExceedsTolerance) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (std::size_t tau : {0u, 1u, 3u}) {
      ExperimentConfig cfg = trace::worked_trace_config();
      cfg.clients = 8;
      cfg.participation = 0.25;
      cfg.staleness_tolerance = tau;
      cfg.rounds = 60;
      cfg.seed = seed;
      cfg.duration_jitter = 1.0;
      cfg.spike_probability = 0.2;
      auto in = trace::worked_trace_inputs();
      in.clients = trace::placeholder_clients(8);
      in.duration_override = nullptr;
      const auto res = simulate(cfg, in);
      for (const auto& led : res.rounds) {
        for (long g : led.gaps) EXPECT_LE(g, static_cast<long>(tau));
        for (long g : led.post_gaps) EXPECT_LE(g, static_cast<long>(tau));
      }
    }
  }
}

TEST(Protocol, InvalidDurationRaises) {
  auto in = trace::worked_trace_inputs();
  in.duration_override = [](std::size_t, std::size_t) { return std::numeric_limits<double>::infinity(); };
  EXPECT_THROW(simulate(trace::worked_trace_config(), in), ProtocolError);
}

TEST(Protocol, MismatchedClientCountIsConfigError) {
  auto in = trace::worked_trace_inputs();
  in.clients = trace::placeholder_clients(4);
  EXPECT_THROW(simulate(trace::worked_trace_config(), in), ConfigError);
}

TEST(Classify, Boundaries) {
  const std::vector<long> bases = {5, 3, 2, 0};
  const std::vector<bool> joined = {true, false, false, false};
  const auto c = classify_clients(bases, joined, 5, 2);
  EXPECT_EQ(c[0], ClientClass::kLatest);
  EXPECT_EQ(c[1], ClientClass::kTolerable);   // gap 2
  EXPECT_EQ(c[2], ClientClass::kDeprecated);  // gap 3
  EXPECT_EQ(c[3], ClientClass::kDeprecated);
}

TEST(Durations, SizeRatioScalesByPowerLaw) {
  const auto m = DurationModel::calibrate({100, 464}, 317.0, 0.42, 0.1);
  EXPECT_NEAR(m.median(464), 317.0, 1e-9);
  EXPECT_NEAR(m.median(464) / m.median(100), std::pow(4.64, 0.42), 1e-12);
  EXPECT_NEAR(std::pow(4.64, 0.42), 1.905, 1e-3);
}

TEST(Durations, NoJitterIsDeterministic) {
  const auto m = DurationModel::calibrate({50, 50}, 10.0, 0.42, 0.0);
  Rng a(1), b(2);
  EXPECT_EQ(simulate_duration(m, 50, a), simulate_duration(m, 50, b));
  EXPECT_DOUBLE_EQ(simulate_duration(m, 50, a), 10.0);
}

TEST(Clock, TiesBreakByClientId) {
  VirtualClock clock;
  clock.schedule({2.0, 4, EventKind::kTrainingDone, 0});
  clock.schedule({1.0, 7, EventKind::kTrainingDone, 0});
  clock.schedule({2.0, 1, EventKind::kTrainingDone, 0});
  EXPECT_EQ(clock.pop().client, 7u);
  EXPECT_EQ(clock.pop().client, 1u);
  EXPECT_EQ(clock.pop().client, 4u);
  EXPECT_DOUBLE_EQ(clock.now(), 2.0);
  EXPECT_THROW(clock.schedule({1.5, 0, EventKind::kTrainingDone, 0}), ProtocolError);
}

TEST(Experiment, RepeatableForFixedSeed) {
  const auto cfg = small_synthetic();
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  ASSERT_EQ(a.rounds.size(), b.rounds.size());
  for (std::size_t r = 0; r < a.rounds.size(); ++r) {
    EXPECT_EQ(a.rounds[r].model_checksum, b.rounds[r].model_checksum);
    EXPECT_EQ(a.rounds[r].participants, b.rounds[r].participants);
  }
  EXPECT_EQ(a.model, b.model);
  auto other = cfg;
  other.seed = 2;
  EXPECT_NE(run_experiment(other).model, a.model);
}

TEST(Experiment, SparseLinkSendsNoMoreThanDense) {
  const auto res = run_experiment(small_synthetic());
  for (const auto& led : res.rounds) {
    EXPECT_LE(led.uplink_bytes, led.uplink_dense_bytes);
    EXPECT_LE(led.downlink_bytes, led.downlink_dense_bytes);
    ASSERT_TRUE(led.metrics.has_value());
    EXPECT_GE(led.metrics->accuracy, 0.0);
  }
}

TEST(Experiment, BaselinesRun) {
  for (auto mode : {BaselineMode::kFedAvgAll, BaselineMode::kFedAvgPartial, BaselineMode::kFedAsync}) {
    auto cfg = small_synthetic();
    cfg.baseline = mode;
    apply_baseline(cfg);
    cfg.sw_beta = 1.0 / static_cast<double>(cfg.quorum() + 1);
    const auto res = run_experiment(cfg);
    ASSERT_EQ(res.rounds.size(), cfg.rounds) << to_string(mode);
    for (const auto& led : res.rounds) {
      EXPECT_EQ(led.participants.size(), cfg.quorum());
      EXPECT_DOUBLE_EQ(led.byte_ratio(), 1.0);
    }
  }
}
