#pragma once

// Declarative description of one experiment, parsed from a flat JSON object
// plus flag overrides. Every field is listed in config_fields(), which is
// also what the CLI turns into --flags.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "feds3a/adaptive_lr.hpp"
#include "feds3a/aggregation.hpp"
#include "feds3a/nn.hpp"
#include "json.hpp"

namespace feds3a {

enum class ScenarioKind { kBasic, kBalanced, kSynthetic };
enum class TransportKind { kSparse, kDense };
enum class BaselineMode { kFedS3A, kFedAvgPartial, kFedAvgAll, kFedAsync };

std::string to_string(ScenarioKind v);
std::string to_string(TransportKind v);
std::string to_string(BaselineMode v);
std::string to_string(OptimizerKind v);
std::string to_string(HistogramSource v);

struct ExperimentConfig {
  ScenarioKind scenario = ScenarioKind::kSynthetic;
  std::size_t clients = 10;             // M
  double participation = 0.6;           // C
  std::size_t staleness_tolerance = 2;  // tau
  std::size_t rounds = 50;              // R
  double threshold = 0.95;              // pseudo-label theta
  std::size_t batch_size = 100;
  std::size_t local_epochs = 1;
  std::size_t server_epochs = 5;        // warm-up epochs before round 0
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 1e-4;          // lambda

  double sw_alpha = 0.5;
  double sw_beta = 1.0 / 7.0;  // config_from_json resolves 1 / (quorum + 1) unless given
  double sw_decay = 0.9;

  StalenessFunction::Kind staleness_function = StalenessFunction::Kind::kExponential;
  double staleness_a = 1.3591409142295225;  // e / 2
  double staleness_b = 0.0;
  RoundWeightFunction::Kind round_weight_function = RoundWeightFunction::Kind::kExponential;
  double round_weight_a = 1.3591409142295225;
  bool adaptive_lr = true;

  std::size_t groups = 3;
  HistogramSource histogram_source = HistogramSource::kPseudoLabel;
  bool normalize = true;

  double l1 = 1e-5;
  double zero_threshold = 1e-8;
  TransportKind transport = TransportKind::kSparse;
  BaselineMode baseline = BaselineMode::kFedS3A;

  std::uint64_t seed = 1;
  std::size_t repetitions = 1;
  double server_fraction = 0.05;

  // CSV scenarios.
  std::string data_path;
  std::string label_column = "Label";
  std::string quota_path;  // empty: shipped table for the scenario
  double test_fraction = 0.1;

  // Synthetic scenario.
  std::size_t synthetic_classes = 3;
  std::size_t synthetic_per_class = 180000;
  std::size_t synthetic_features = 8;
  double synthetic_separation = 6.0;
  double dirichlet_alpha = 0.3;
  double size_ratio = 4.64;

  std::vector<std::size_t> hidden_layers = {64, 32};
  double dropout = 0.0;

  // Virtual training durations: kappa * |D_i|^exponent * lognormal(jitter),
  // kappa chosen so the largest client takes duration_target seconds.
  double duration_target = 317.0;
  double duration_exponent = 0.42;
  double duration_jitter = 0.1;
  double spike_probability = 0.0;
  double spike_factor = 5.0;

  bool early_stopping = false;
  std::size_t patience = 10;
  double min_delta = 1e-4;

  // ceil(C * M)
  std::size_t quorum() const;
  StalenessFunction staleness() const;
  RoundWeightFunction round_weight() const;
  SupervisedWeightSchedule supervised_weight() const;

  // Throws ValidationError naming the field.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

// Defaults with the scenario-dependent staleness and round-weight choices.
ExperimentConfig defaults_for(ScenarioKind scenario);

// Forces the fields a baseline mode fixes (C, tau, functions, transport...).
void apply_baseline(ExperimentConfig& cfg);

// Unknown keys, wrong types and violated bounds raise ValidationError.
ExperimentConfig config_from_json(const nlohmann::json& doc);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

ExperimentConfig load_config(const std::filesystem::path& path);

// Parses a file (may be empty/absent) and applies key -> value overrides on
// top. Override values are JSON literals or bare strings.
ExperimentConfig parse_and_validate(const std::filesystem::path* file,
                                    const std::map<std::string, std::string>& overrides);

struct ConfigField {
  std::string name;
  std::string help;
};
const std::vector<ConfigField>& config_fields();

}  // namespace feds3a
