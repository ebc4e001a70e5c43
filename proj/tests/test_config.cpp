#include <gtest/gtest.h>

#include "feds3a/config.hpp"
#include "feds3a/error.hpp"

using namespace feds3a;
using nlohmann::json;

TEST(Config, DefaultsValidate) {
  const ExperimentConfig c = config_from_json(json::object());
  EXPECT_EQ(c.clients, 10u);
  EXPECT_EQ(c.quorum(), 6u);
  EXPECT_DOUBLE_EQ(c.sw_beta, 1.0 / 7.0);
  EXPECT_EQ(c.staleness_function, StalenessFunction::Kind::kExponential);
  EXPECT_NO_THROW(c.validate());
  EXPECT_NO_THROW(ExperimentConfig{}.validate());
}

TEST(Config, OutOfRangeParticipationNamesField) {
  try {
    config_from_json(json{{"participation", 1.5}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "participation");
  }
}

TEST(Config, UnknownKeyRejected) {
  try {
    config_from_json(json{{"participaton", 0.5}});
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "participaton");
  }
}

TEST(Config, WrongTypeRejected) {
  EXPECT_THROW(config_from_json(json{{"rounds", "many"}}), ValidationError);
  EXPECT_THROW(config_from_json(json{{"transport", "carrier-pigeon"}}), ValidationError);
}

TEST(Config, OverridesAreEchoedInOutput) {
  const auto c = parse_and_validate(nullptr, {{"staleness_tolerance", "4"}, {"transport", "dense"}});
  EXPECT_EQ(c.staleness_tolerance, 4u);
  const json out = config_to_json(c);
  EXPECT_EQ(out["staleness_tolerance"], 4);
  EXPECT_EQ(out["transport"], "dense");
}

TEST(Config, JsonRoundTrip) {
  json doc{{"participation", 0.4}, {"staleness_function", "hinge"}, {"hidden_layers", {12, 6}}, {"seed", 99}};
  const auto c = config_from_json(doc);
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  EXPECT_EQ(c.hidden_layers, (std::vector<std::size_t>{12, 6}));
}

TEST(Config, FunctionChoiceBringsItsParameter) {
  const auto c = config_from_json(json{{"staleness_function", "polynomial"}});
  EXPECT_DOUBLE_EQ(c.staleness_a, 0.5);
  const auto d = config_from_json(json{{"staleness_function", "polynomial"}, {"staleness_a", 2.0}});
  EXPECT_DOUBLE_EQ(d.staleness_a, 2.0);
  EXPECT_THROW(config_from_json(json{{"round_weight_function", "exponential"}, {"round_weight_a", 0.5}}),
               ValidationError);
}

TEST(Config, BalancedScenarioDefaults) {
  const auto c = defaults_for(ScenarioKind::kBalanced);
  EXPECT_EQ(c.staleness_function, StalenessFunction::Kind::kPolynomial);
  EXPECT_DOUBLE_EQ(c.staleness_a, 0.5);
  EXPECT_EQ(c.round_weight_function, RoundWeightFunction::Kind::kExponentialSmoothing);
  EXPECT_DOUBLE_EQ(c.round_weight_a, 0.1);
}

TEST(Config, CsvScenarioNeedsDataPath) {
  EXPECT_THROW(config_from_json(json{{"scenario", "basic"}}), ValidationError);
}

TEST(Config, SupervisedFloorFollowsQuorum) {
  EXPECT_DOUBLE_EQ(config_from_json(json{{"participation", 0.4}}).sw_beta, 1.0 / 5.0);
  EXPECT_DOUBLE_EQ(config_from_json(json{{"participation", 0.4}, {"sw_beta", 0.25}}).sw_beta, 0.25);
  EXPECT_THROW(config_from_json(json{{"sw_beta", 0.9}}), ValidationError);
}

TEST(Baseline, FedAvgAllForcesSynchronousSettings) {
  const auto c = config_from_json(json{{"baseline", "fedavg-all"}, {"participation", 0.3}, {"groups", 5}});
  EXPECT_DOUBLE_EQ(c.participation, 1.0);
  EXPECT_EQ(c.staleness_tolerance, 0u);
  EXPECT_EQ(c.staleness_function, StalenessFunction::Kind::kConstant);
  EXPECT_FALSE(c.adaptive_lr);
  EXPECT_EQ(c.groups, 1u);
  EXPECT_EQ(c.transport, TransportKind::kDense);
  EXPECT_DOUBLE_EQ(c.sw_beta, 1.0 / 11.0);
}

TEST(Baseline, FedAsyncTakesOneUploadPerRound) {
  const auto c = config_from_json(json{{"baseline", "fedasync"}});
  EXPECT_EQ(c.quorum(), 1u);
  EXPECT_EQ(c.staleness_function, StalenessFunction::Kind::kPolynomial);
  EXPECT_DOUBLE_EQ(c.staleness_a, 0.5);
  EXPECT_DOUBLE_EQ(c.sw_beta, 0.5);
}

TEST(Baseline, FedAvgPartialKeepsParticipation) {
  const auto c = config_from_json(json{{"baseline", "fedavg-partial"}, {"participation", 0.5}});
  EXPECT_DOUBLE_EQ(c.participation, 0.5);
  EXPECT_EQ(c.staleness_tolerance, 0u);
  EXPECT_EQ(c.round_weight_function, RoundWeightFunction::Kind::kConstant);
}

TEST(Config, QuorumRoundsUp) {
  ExperimentConfig c;
  c.clients = 10;
  c.participation = 0.55;
  EXPECT_EQ(c.quorum(), 6u);
  c.participation = 0.01;
  EXPECT_EQ(c.quorum(), 1u);
  c.participation = 0.3;  // 0.3 * 10 is 3.0000000000000004 in binary
  EXPECT_EQ(c.quorum(), 3u);
}

TEST(Config, EveryFieldIsListed) {
  const json out = config_to_json(ExperimentConfig{});
  EXPECT_EQ(out.size(), config_fields().size());
  for (const auto& f : config_fields()) EXPECT_TRUE(out.contains(f.name)) << f.name;
}
