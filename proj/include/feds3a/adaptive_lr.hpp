#pragma once

// Per-client learning rates from round-weighted participation frequencies.

#include <cstddef>
#include <string>
#include <vector>

namespace feds3a {

class RoundWeightFunction {
 public:
  enum class Kind { kConstant, kLogarithmic, kPolynomial, kExponentialSmoothing, kExponential };

  static RoundWeightFunction constant() { return {Kind::kConstant, 0.0}; }
  static RoundWeightFunction logarithmic() { return {Kind::kLogarithmic, 0.0}; }
  static RoundWeightFunction polynomial(double a) { return {Kind::kPolynomial, a}; }
  static RoundWeightFunction exponential_smoothing(double a) { return {Kind::kExponentialSmoothing, a}; }
  static RoundWeightFunction exponential(double a) { return {Kind::kExponential, a}; }

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  void validate() const;

  // Weight of a participation in global round `round` (0-based). The
  // functions are evaluated at the 1-based update count n = round + 1:
  //   constant 1, logarithmic ln(1 + n), polynomial (1 + n)^a,
  //   exponential smoothing (1 + a)^n, exponential a^n.
  double operator()(std::size_t round) const;

  static std::string name(Kind kind);
  static Kind parse(const std::string& name);

 private:
  RoundWeightFunction(Kind k, double a) : kind_(k), a_(a) {}
  Kind kind_;
  double a_;
};

class ParticipationTracker {
 public:
  explicit ParticipationTracker(std::size_t clients) : rounds_(clients) {}

  // Rounds must be recorded in nondecreasing order per client; a repeated
  // round is ignored.
  void record(std::size_t client, std::size_t round);
  std::size_t clients() const { return rounds_.size(); }
  const std::vector<std::size_t>& rounds(std::size_t client) const { return rounds_.at(client); }
  bool any() const;

 private:
  std::vector<std::vector<std::size_t>> rounds_;
};

// f_i = sum_{r' in P_i} h(r') / sum_j sum_{r' in P_j} h(r'); uniform 1/M
// before any participation.
std::vector<double> frequency(const ParticipationTracker& tracker, const RoundWeightFunction& h,
                              std::size_t current_round);

struct RateClamp {
  double low_factor = 0.1;
  double high_factor = 10.0;
};

// eta_i = lambda / (M f_i), clamped to [low * lambda, high * lambda]. A zero
// frequency is floored to 1 / (10 M) first.
double adaptive_rate(double frequency, double lambda, std::size_t clients, RateClamp clamp = {});

// Unclamped lambda / (M f_i).
double raw_adaptive_rate(double frequency, double lambda, std::size_t clients);

}  // namespace feds3a
