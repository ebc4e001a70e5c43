#include "feds3a/adaptive_lr.hpp"

#include <algorithm>
#include <cmath>

#include "feds3a/error.hpp"

namespace feds3a {

void RoundWeightFunction::validate() const {
  switch (kind_) {
    case Kind::kConstant:
    case Kind::kLogarithmic:
      return;
    case Kind::kPolynomial:
    case Kind::kExponentialSmoothing:
      if (!(a_ > 0.0)) throw ConfigError("round-weight parameter a must be > 0");
      return;
    case Kind::kExponential:
      if (!(a_ > 1.0)) throw ConfigError("exponential round-weight needs a > 1");
      return;
  }
}

double RoundWeightFunction::operator()(std::size_t round) const {
  const double n = static_cast<double>(round) + 1.0;
  switch (kind_) {
    case Kind::kConstant: return 1.0;
    case Kind::kLogarithmic: return std::log1p(n);
    case Kind::kPolynomial: return std::pow(1.0 + n, a_);
    case Kind::kExponentialSmoothing: return std::pow(1.0 + a_, n);
    case Kind::kExponential: return std::pow(a_, n);
  }
  return 1.0;
}

std::string RoundWeightFunction::name(Kind kind) {
  switch (kind) {
    case Kind::kConstant: return "constant";
    case Kind::kLogarithmic: return "logarithmic";
    case Kind::kPolynomial: return "polynomial";
    case Kind::kExponentialSmoothing: return "exponential-smoothing";
    case Kind::kExponential: return "exponential";
  }
  return "constant";
}

RoundWeightFunction::Kind RoundWeightFunction::parse(const std::string& name) {
  for (auto k : {Kind::kConstant, Kind::kLogarithmic, Kind::kPolynomial, Kind::kExponentialSmoothing,
                 Kind::kExponential}) {
    if (RoundWeightFunction::name(k) == name) return k;
  }
  throw ConfigError("unknown round-weight function '" + name + "'");
}

void ParticipationTracker::record(std::size_t client, std::size_t round) {
  auto& r = rounds_.at(client);
  if (!r.empty() && r.back() == round) return;
  if (!r.empty() && r.back() > round) throw std::logic_error("participation rounds must not decrease");
  r.push_back(round);
}

bool ParticipationTracker::any() const {
  return std::any_of(rounds_.begin(), rounds_.end(), [](const auto& r) { return !r.empty(); });
}

std::vector<double> frequency(const ParticipationTracker& tracker, const RoundWeightFunction& h,
                              std::size_t current_round) {
  const std::size_t m = tracker.clients();
  std::vector<double> f(m, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (auto r : tracker.rounds(i)) {
      if (r > current_round) throw std::logic_error("participation recorded after the current round");
      f[i] += h(r);
    }
    total += f[i];
  }
  if (!(total > 0.0)) return std::vector<double>(m, 1.0 / static_cast<double>(m));
  for (auto& v : f) v /= total;
  return f;
}

double raw_adaptive_rate(double frequency, double lambda, std::size_t clients) {
  return lambda / (static_cast<double>(clients) * frequency);
}

double adaptive_rate(double frequency, double lambda, std::size_t clients, RateClamp clamp) {
  if (!(lambda > 0.0)) throw ConfigError("global learning rate must be positive");
  if (clients == 0) throw ConfigError("client count must be positive");
  const double floor = 1.0 / (10.0 * static_cast<double>(clients));
  const double f = frequency > 0.0 ? frequency : floor;
  const double eta = raw_adaptive_rate(f, lambda, clients);
  return std::clamp(eta, clamp.low_factor * lambda, clamp.high_factor * lambda);
}

}  // namespace feds3a
