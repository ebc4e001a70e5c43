#pragma once

// Virtual-clock simulation of the semi-asynchronous protocol: clients train
// for a simulated duration and upload; once a quorum of uploads is buffered
// the server aggregates and redistributes to participating and overly stale
// clients.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "feds3a/config.hpp"
#include "feds3a/data.hpp"
#include "feds3a/metrics.hpp"
#include "feds3a/nn.hpp"

namespace feds3a {

enum class EventKind : int { kTrainingDone = 0 };

struct Event {
  double time = 0.0;
  std::size_t client = 0;
  EventKind kind = EventKind::kTrainingDone;
  std::uint64_t generation = 0;  // stale when it differs from the client's current one
};

// Min-heap on (time, client, kind).
class VirtualClock {
 public:
  double now() const { return now_; }
  void schedule(const Event& e);
  bool empty() const { return queue_.empty(); }
  const Event& peek() const { return queue_.top(); }
  // Pops the earliest event and advances now().
  Event pop();
  std::size_t pending() const { return queue_.size(); }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };
  double now_ = 0.0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
};

// kappa * size^exponent * exp(jitter * N(0, 1)), times spike_factor with
// probability spike_probability.
struct DurationModel {
  double kappa = 1.0;
  double exponent = 0.42;
  double jitter = 0.1;
  double spike_probability = 0.0;
  double spike_factor = 5.0;

  // kappa such that the largest size maps to `target` seconds (median).
  static DurationModel calibrate(const std::vector<std::size_t>& sizes, double target,
                                 double exponent, double jitter, double spike_probability = 0.0,
                                 double spike_factor = 5.0);
  double median(std::size_t size) const;
};

double simulate_duration(const DurationModel& model, std::size_t size, Rng& rng);

enum class ClientClass { kLatest, kTolerable, kDeprecated };
std::string to_string(ClientClass c);

// After the update producing version `new_version`: participants are latest,
// clients with new_version - base > tolerance are deprecated, the rest
// tolerable.
std::vector<ClientClass> classify_clients(const std::vector<long>& base_versions,
                                          const std::vector<bool>& participated, long new_version,
                                          std::size_t tolerance);

struct RoundMetrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;
  bool zero_division = false;
};

struct RoundLedger {
  std::size_t round = 0;
  std::vector<std::size_t> participants;  // in upload order
  std::vector<long> gaps;                 // round - base version, per participant
  // Per client: new version - base version, before distribution.
  std::vector<long> staleness;
  std::vector<std::size_t> forced;      // deprecated clients
  std::vector<std::size_t> recipients;  // latest and deprecated clients
  // Per client: new version - base version, after distribution.
  std::vector<long> post_gaps;
  double supervised_weight = 0.0;
  std::vector<double> learning_rates;  // per client, after this round
  double start_time = 0.0;
  double end_time = 0.0;
  std::size_t uplink_bytes = 0;
  std::size_t uplink_dense_bytes = 0;
  std::size_t downlink_bytes = 0;
  std::size_t downlink_dense_bytes = 0;
  double upload_sparsity = 0.0;  // mean fraction of zero delta entries among uploads
  std::optional<RoundMetrics> metrics;
  std::uint64_t model_checksum = 0;

  double duration() const { return end_time - start_time; }
  // Bytes sent over dense-equivalent bytes; 1 when nothing moved.
  double byte_ratio() const;
};

struct SimulationInputs {
  ModelSpec spec;
  std::vector<UnlabeledView> clients;
  LabeledView server;
  LabeledView eval;  // empty: no per-round metrics
  // Used when histogram_source is oracle; one distribution per client.
  std::vector<std::vector<double>> oracle_histograms;
  // Replaces the duration model: (client, attempt) -> seconds.
  std::function<double(std::size_t, std::size_t)> duration_override;
  // Skip all training and keep models fixed; for protocol-only checks.
  bool skip_training = false;
  std::function<void(const RoundLedger&)> on_round;
};

struct ExperimentResult {
  ParamVector model;
  std::vector<RoundLedger> rounds;
  std::vector<std::vector<std::size_t>> participation;  // rounds joined, per client
  bool stopped_early = false;
};

// Throws ProtocolError when no quorum can form.
ExperimentResult simulate(const ExperimentConfig& cfg, const SimulationInputs& inputs);

// Data, partition and model for a configuration.
struct Scenario {
  Dataset data;
  TrainTestSplit split;
  ScenarioPartition partition;
  ModelSpec spec;
  CsvLoadReport load_report;

  SimulationInputs inputs() const;
};

Scenario build_scenario(const ExperimentConfig& cfg);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

RoundMetrics to_round_metrics(const WeightedMetrics& m);

}  // namespace feds3a
