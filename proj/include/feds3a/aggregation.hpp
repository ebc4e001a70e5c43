#pragma once

// Global-model arithmetic: FedAvg, the semi-supervised average, the dynamic
// supervised weight, staleness discounting and group-based aggregation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "feds3a/nn.hpp"

namespace feds3a {

struct SizedModel {
  std::reference_wrapper<const ParamVector> params;
  double data_size;
};

// Size-weighted mean; weights are |D_i| / sum |D|.
ParamVector fedavg(std::span<const SizedModel> models);

// Server model weighted by its labeled-set size alongside the clients, as if
// the server were one more FedAvg participant.
ParamVector naive_semi_supervised_average(const ParamVector& server, double server_size,
                                          std::span<const SizedModel> clients);

// f(r) = beta + (alpha - beta) * decay^r.
struct SupervisedWeightSchedule {
  double alpha = 0.5;
  double beta = 1.0 / 7.0;
  double decay = 0.9;

  // beta = 1 / (quorum + 1), the server weighted like one average client.
  static SupervisedWeightSchedule for_quorum(std::size_t quorum, double alpha = 0.5,
                                             double decay = 0.9);
  void validate() const;
  double operator()(std::size_t round) const;
};

class StalenessFunction {
 public:
  enum class Kind { kConstant, kPolynomial, kHinge, kExponential };

  static StalenessFunction constant() { return {Kind::kConstant, 0.0, 0.0}; }
  // (gap + 1)^-a
  static StalenessFunction polynomial(double a) { return {Kind::kPolynomial, a, 0.0}; }
  // 1 if gap <= b, else 1 / (a (gap + b) + 1)
  static StalenessFunction hinge(double a, double b) { return {Kind::kHinge, a, b}; }
  // a^-gap
  static StalenessFunction exponential(double a) { return {Kind::kExponential, a, 0.0}; }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }
  void validate() const;
  // Throws std::logic_error on a negative gap.
  double operator()(long gap) const;

  static std::string name(Kind kind);
  static Kind parse(const std::string& name);

 private:
  StalenessFunction(Kind k, double a, double b) : kind_(k), a_(a), b_(b) {}
  Kind kind_;
  double a_;
  double b_;
};

enum class HistogramSource { kPseudoLabel, kOracle };

struct GroupingConfig {
  std::size_t groups = 3;
  HistogramSource source = HistogramSource::kPseudoLabel;
  std::size_t max_iterations = 100;
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
};

struct ClientHistogram {
  std::size_t client_id;
  std::vector<double> distribution;  // sums to 1
};

// K-means (k-means++ seeding, Lloyd iterations) over class distributions.
// Returns a group id per participant, in input order. Ids are dense and
// numbered by first appearance; empty clusters are dropped, so fewer than
// cfg.groups ids may come back.
std::vector<std::size_t> group_clients(std::span<const ClientHistogram> participants,
                                       const GroupingConfig& cfg);

struct Participant {
  std::reference_wrapper<const ParamVector> params;
  double data_size;
  long base_version;
  std::size_t group = 0;
  std::size_t client_id = 0;
};

struct AggregationResult {
  ParamVector model;
  double server_weight = 0.0;
  // Coefficient of each participant's model in the output, in input order.
  std::vector<double> client_weights;
};

// Group-based, staleness-discounted aggregation at round r:
//   out = f(r) * server + (1 - f(r)) * mean_k sum_{i in G_k} w_i * model_i
//   w_i = |D_i| / |D_{G_k}| * g(r - r_i), renormalized per group if requested.
AggregationResult aggregate(const ParamVector& server_model,
                            std::span<const Participant> participants, std::size_t round,
                            const SupervisedWeightSchedule& schedule,
                            const StalenessFunction& staleness, bool normalize);

// Same, with an explicit supervised weight instead of a schedule.
AggregationResult aggregate_with_weight(const ParamVector& server_model,
                                        std::span<const Participant> participants,
                                        std::size_t round, double supervised_weight,
                                        const StalenessFunction& staleness, bool normalize);

}  // namespace feds3a
