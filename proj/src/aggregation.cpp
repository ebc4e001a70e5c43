#include "feds3a/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "feds3a/error.hpp"
#include "feds3a/rng.hpp"

namespace feds3a {

namespace {

void axpy(double a, const ParamVector& x, ParamVector& y) {
  auto yv = y.values();
  const auto xv = x.values();
  for (std::size_t k = 0; k < yv.size(); ++k) yv[k] += a * xv[k];
}

void require_layout(const ParamVector& reference, const ParamVector& other) {
  if (!reference.same_layout(other)) throw ConfigError("models with different layouts cannot be aggregated");
}

}  // namespace

ParamVector fedavg(std::span<const SizedModel> models) {
  if (models.empty()) throw InputError("fedavg needs at least one model");
  double total = 0.0;
  for (const auto& m : models) {
    if (!(m.data_size > 0.0)) throw InputError("fedavg data sizes must be positive");
    require_layout(models.front().params, m.params);
    total += m.data_size;
  }
  auto out = ParamVector::zeros(models.front().params.get().shapes());
  for (const auto& m : models) axpy(m.data_size / total, m.params, out);
  return out;
}

ParamVector naive_semi_supervised_average(const ParamVector& server, double server_size,
                                          std::span<const SizedModel> clients) {
  std::vector<SizedModel> all{{std::cref(server), server_size}};
  all.insert(all.end(), clients.begin(), clients.end());
  return fedavg(all);
}

SupervisedWeightSchedule SupervisedWeightSchedule::for_quorum(std::size_t quorum, double alpha,
                                                              double decay) {
  return {alpha, 1.0 / (static_cast<double>(quorum) + 1.0), decay};
}

void SupervisedWeightSchedule::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("supervised weight alpha must lie in (0, 1)");
  if (!(beta > 0.0 && beta <= alpha)) throw ConfigError("supervised weight beta must lie in (0, alpha]");
  if (!(decay >= 0.0 && decay < 1.0)) throw ConfigError("supervised weight decay must lie in [0, 1)");
}

double SupervisedWeightSchedule::operator()(std::size_t round) const {
  return beta + (alpha - beta) * std::pow(decay, static_cast<double>(round));
}

void StalenessFunction::validate() const {
  switch (kind_) {
    case Kind::kConstant:
      return;
    case Kind::kPolynomial:
      if (!(a_ > 0.0)) throw ConfigError("polynomial staleness needs a > 0");
      return;
    case Kind::kHinge:
      if (!(a_ > 0.0) || !(b_ >= 0.0)) throw ConfigError("hinge staleness needs a > 0 and b >= 0");
      return;
    case Kind::kExponential:
      if (!(a_ > 1.0)) throw ConfigError("exponential staleness needs a > 1");
      return;
  }
}

double StalenessFunction::operator()(long gap) const {
  if (gap < 0) throw std::logic_error("negative staleness gap " + std::to_string(gap));
  const double s = static_cast<double>(gap);
  switch (kind_) {
    case Kind::kConstant:
      return 1.0;
    case Kind::kPolynomial:
      return std::pow(s + 1.0, -a_);
    case Kind::kHinge:
      return s <= b_ ? 1.0 : 1.0 / (a_ * (s + b_) + 1.0);
    case Kind::kExponential:
      return std::pow(a_, -s);
  }
  return 1.0;
}

std::string StalenessFunction::name(Kind kind) {
  switch (kind) {
    case Kind::kConstant: return "constant";
    case Kind::kPolynomial: return "polynomial";
    case Kind::kHinge: return "hinge";
    case Kind::kExponential: return "exponential";
  }
  return "constant";
}

StalenessFunction::Kind StalenessFunction::parse(const std::string& name) {
  for (auto k : {Kind::kConstant, Kind::kPolynomial, Kind::kHinge, Kind::kExponential}) {
    if (StalenessFunction::name(k) == name) return k;
  }
  throw ConfigError("unknown staleness function '" + name + "'");
}

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return d;
}

}  // namespace

std::vector<std::size_t> group_clients(std::span<const ClientHistogram> participants,
                                       const GroupingConfig& cfg) {
  if (participants.empty()) throw InputError("grouping needs at least one participant");
  if (cfg.groups == 0) throw ConfigError("group count must be positive");
  const std::size_t n = participants.size();
  const std::size_t dim = participants.front().distribution.size();
  for (const auto& p : participants) {
    if (p.distribution.size() != dim) throw InputError("histograms differ in length");
    double s = 0.0;
    for (double v : p.distribution) {
      if (!(v >= 0.0)) throw InputError("histogram entries must be nonnegative");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) {
      throw InputError("histogram of client " + std::to_string(p.client_id) + " does not sum to 1");
    }
  }
  const std::size_t k = std::min(cfg.groups, n);

  // k-means++ seeding. Stops early when every point coincides with a centre.
  Rng rng(derive_seed(cfg.seed, Stream::kGrouping, {n, k}));
  std::vector<std::vector<double>> centres;
  centres.push_back(participants[rng.uniform_index(n)].distribution);
  std::vector<double> d2(n);
  while (centres.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centres) best = std::min(best, sq_dist(participants[i].distribution, c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) break;
    double u = rng.uniform01() * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      if (u < d2[i]) {
        pick = i;
        break;
      }
      u -= d2[i];
    }
    while (d2[pick] <= 0.0) --pick;  // guards against rounding at the tail
    centres.push_back(participants[pick].distribution);
  }

  std::vector<std::size_t> assign(n, 0);
  for (std::size_t iter = 0; iter < std::max<std::size_t>(cfg.max_iterations, 1); ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < centres.size(); ++c) {
        const double d = sq_dist(participants[i].distribution, centres[c]);
        if (d < best) best = d, assign[i] = c;
      }
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < centres.size(); ++c) {
      std::vector<double> mean(dim, 0.0);
      std::size_t count = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assign[i] != c) continue;
        ++count;
        for (std::size_t j = 0; j < dim; ++j) mean[j] += participants[i].distribution[j];
      }
      if (count == 0) continue;
      for (auto& m : mean) m /= static_cast<double>(count);
      shift = std::max(shift, std::sqrt(sq_dist(mean, centres[c])));
      centres[c] = std::move(mean);
    }
    if (shift < cfg.tolerance) break;
  }

  std::map<std::size_t, std::size_t> relabel;
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto it = relabel.try_emplace(assign[i], relabel.size()).first;
    out[i] = it->second;
  }
  return out;
}

AggregationResult aggregate_with_weight(const ParamVector& server_model,
                                        std::span<const Participant> participants,
                                        std::size_t round, double supervised_weight,
                                        const StalenessFunction& staleness, bool normalize) {
  if (participants.empty()) throw InputError("aggregation needs at least one participant");
  if (!server_model.all_finite()) throw NumericError("server model has non-finite parameters");
  for (const auto& p : participants) {
    require_layout(server_model, p.params);
    if (!p.params.get().all_finite()) {
      throw NumericError("client " + std::to_string(p.client_id) + " uploaded non-finite parameters");
    }
    if (!(p.data_size > 0.0)) {
      throw InputError("client " + std::to_string(p.client_id) + " has no data");
    }
  }

  std::map<std::size_t, double> group_size;
  for (const auto& p : participants) group_size[p.group] += p.data_size;

  std::vector<double> w(participants.size());
  std::map<std::size_t, double> group_sum;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    const auto& p = participants[i];
    const long gap = static_cast<long>(round) - p.base_version;
    w[i] = p.data_size / group_size[p.group] * staleness(gap);
    group_sum[p.group] += w[i];
  }
  const double groups = static_cast<double>(group_size.size());
  AggregationResult out;
  out.server_weight = supervised_weight;
  out.model = server_model;
  for (auto& v : out.model.values()) v *= supervised_weight;
  out.client_weights.resize(participants.size());
  for (std::size_t i = 0; i < participants.size(); ++i) {
    double wi = w[i];
    if (normalize) wi /= group_sum[participants[i].group];
    out.client_weights[i] = (1.0 - supervised_weight) * wi / groups;
    axpy(out.client_weights[i], participants[i].params, out.model);
  }
  return out;
}

AggregationResult aggregate(const ParamVector& server_model,
                            std::span<const Participant> participants, std::size_t round,
                            const SupervisedWeightSchedule& schedule,
                            const StalenessFunction& staleness, bool normalize) {
  return aggregate_with_weight(server_model, participants, round, schedule(round), staleness,
                               normalize);
}

}  // namespace feds3a
