#pragma once

// Five clients with scripted training durations, quorum 2, tolerance 2, four
// rounds. Shared by the unit tests and the acceptance binary.

#include <array>
#include <vector>

#include "feds3a/sim.hpp"

namespace feds3a::trace {

inline ExperimentConfig worked_trace_config() {
  ExperimentConfig cfg;
  cfg.clients = 5;
  cfg.participation = 0.4;
  cfg.staleness_tolerance = 2;
  cfg.rounds = 4;
  cfg.groups = 1;
  cfg.sw_beta = 1.0 / 3.0;
  return cfg;
}

// Placeholder client views of `rows` rows each; training is skipped, so only
// the sizes matter.
inline std::vector<UnlabeledView> placeholder_clients(std::size_t clients, std::size_t rows = 100) {
  static const Matrix features(1, 2);
  return std::vector<UnlabeledView>(clients, UnlabeledView(features, std::vector<std::size_t>(rows, 0)));
}

inline SimulationInputs worked_trace_inputs() {
  SimulationInputs in;
  in.spec.widths = {2, 2, 2};
  in.clients = placeholder_clients(5);
  in.skip_training = true;
  in.duration_override = [](std::size_t client, std::size_t attempt) {
    static const std::vector<std::vector<double>> script = {
        {1.0, 0.9, 10.0}, {1.1, 2.0, 1000.0}, {2.1, 1.6}, {3.0, 1000.0}, {100.0, 0.5}};
    const auto& s = script.at(client);
    return attempt < s.size() ? s[attempt] : 1e6;
  };
  return in;
}

// Gap to the newest version per client after each round's distribution.
inline const std::array<std::vector<long>, 4> kTracePostGaps = {
    std::vector<long>{0, 0, 1, 1, 1}, std::vector<long>{0, 1, 0, 2, 2}, std::vector<long>{1, 0, 1, 0, 0},
    std::vector<long>{2, 1, 0, 1, 0}};

inline const std::array<std::vector<std::size_t>, 4> kTraceParticipants = {
    std::vector<std::size_t>{0, 1}, std::vector<std::size_t>{0, 2}, std::vector<std::size_t>{3, 1},
    std::vector<std::size_t>{4, 2}};

}  // namespace feds3a::trace
