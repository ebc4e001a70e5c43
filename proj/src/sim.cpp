#include "feds3a/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "feds3a/adaptive_lr.hpp"
#include "feds3a/aggregation.hpp"
#include "feds3a/error.hpp"
#include "feds3a/ssl.hpp"
#include "feds3a/transport.hpp"

namespace feds3a {

bool VirtualClock::Later::operator()(const Event& a, const Event& b) const {
  if (a.time != b.time) return a.time > b.time;
  if (a.client != b.client) return a.client > b.client;
  return static_cast<int>(a.kind) > static_cast<int>(b.kind);
}

void VirtualClock::schedule(const Event& e) {
  if (!(e.time >= now_)) throw ProtocolError("event scheduled in the past");
  queue_.push(e);
}

Event VirtualClock::pop() {
  Event e = queue_.top();
  queue_.pop();
  now_ = e.time;
  return e;
}

DurationModel DurationModel::calibrate(const std::vector<std::size_t>& sizes, double target,
                                       double exponent, double jitter, double spike_probability,
                                       double spike_factor) {
  DurationModel m;
  m.exponent = exponent;
  m.jitter = jitter;
  m.spike_probability = spike_probability;
  m.spike_factor = spike_factor;
  const std::size_t largest = sizes.empty() ? 1 : std::max<std::size_t>(1, *std::max_element(sizes.begin(), sizes.end()));
  m.kappa = target / std::pow(static_cast<double>(largest), exponent);
  return m;
}

double DurationModel::median(std::size_t size) const {
  return kappa * std::pow(static_cast<double>(std::max<std::size_t>(size, 1)), exponent);
}

double simulate_duration(const DurationModel& model, std::size_t size, Rng& rng) {
  double d = model.median(size);
  if (model.jitter > 0.0) d *= std::exp(model.jitter * rng.normal());
  if (model.spike_probability > 0.0 && rng.uniform01() < model.spike_probability) d *= model.spike_factor;
  return d;
}

std::string to_string(ClientClass c) {
  switch (c) {
    case ClientClass::kLatest: return "latest";
    case ClientClass::kTolerable: return "tolerable";
    case ClientClass::kDeprecated: return "deprecated";
  }
  return "?";
}

std::vector<ClientClass> classify_clients(const std::vector<long>& base_versions,
                                          const std::vector<bool>& participated, long new_version,
                                          std::size_t tolerance) {
  std::vector<ClientClass> out(base_versions.size(), ClientClass::kTolerable);
  for (std::size_t i = 0; i < base_versions.size(); ++i) {
    if (participated[i]) {
      out[i] = ClientClass::kLatest;
    } else if (new_version - base_versions[i] > static_cast<long>(tolerance)) {
      out[i] = ClientClass::kDeprecated;
    }
  }
  return out;
}

double RoundLedger::byte_ratio() const {
  const std::size_t dense = uplink_dense_bytes + downlink_dense_bytes;
  if (dense == 0) return 1.0;
  return static_cast<double>(uplink_bytes + downlink_bytes) / static_cast<double>(dense);
}

RoundMetrics to_round_metrics(const WeightedMetrics& m) {
  return {m.accuracy, m.precision, m.recall, m.f1, m.fpr, m.zero_division};
}

namespace {

struct ClientState {
  ParamVector model;  // what the client holds; the server mirrors it exactly
  long base = 0;
  bool training = false;
  std::uint64_t generation = 0;
  std::size_t attempts = 0;
  double rate = 0.0;        // learning rate for the next training call
  double train_rate = 0.0;  // learning rate of the call in flight
};

struct Upload {
  std::size_t client = 0;
  ParamVector params;
  long base = 0;
  std::vector<std::size_t> histogram;
  TransferCost cost;
  double sparsity = 0.0;
};

std::vector<double> normalized(const std::vector<std::size_t>& counts, std::size_t classes) {
  std::vector<double> out(classes, 0.0);
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  for (std::size_t k = 0; k < classes; ++k) {
    out[k] = total > 0.0 ? static_cast<double>(counts[k]) / total : 1.0 / static_cast<double>(classes);
  }
  return out;
}

class Simulation {
 public:
  Simulation(const ExperimentConfig& cfg, const SimulationInputs& in) : cfg_(cfg), in_(in) {
    in_.spec.validate();
    if (in_.clients.size() != cfg_.clients) {
      throw ConfigError("config has " + std::to_string(cfg_.clients) + " clients, inputs have " +
                        std::to_string(in_.clients.size()));
    }
    partial_ = cfg_.baseline == BaselineMode::kFedAvgPartial;
    quorum_ = cfg_.quorum();
    for (const auto& c : in_.clients) sizes_.push_back(c.size());
    durations_ = DurationModel::calibrate(sizes_, cfg_.duration_target, cfg_.duration_exponent,
                                          cfg_.duration_jitter, cfg_.spike_probability, cfg_.spike_factor);
    staleness_ = cfg_.staleness();
    round_weight_ = cfg_.round_weight();
    schedule_ = cfg_.supervised_weight();
    pl_.threshold = cfg_.threshold;
    pl_.batch_size = cfg_.batch_size;
    pl_.epochs = cfg_.local_epochs;
  }

  ExperimentResult run() {
    const std::size_t m = cfg_.clients;
    global_ = init_params(in_.spec, derive_seed(cfg_.seed, Stream::kInit, {}));
    if (!in_.skip_training && in_.server.size() > 0 && cfg_.server_epochs > 0) {
      global_ = server_train(global_, cfg_.server_epochs, 0);
    }
    clients_.resize(m);
    for (auto& c : clients_) {
      c.model = global_;
      c.rate = cfg_.learning_rate;
    }
    // Initial distribution of the warmed-up model; not counted in any round.
    if (!partial_) {
      for (std::size_t i = 0; i < m; ++i) start_training(i);
    }

    ParticipationTracker tracker(m);
    ExperimentResult result;
    double round_start = 0.0;
    double best_accuracy = -1.0;
    std::size_t since_best = 0;

    for (std::size_t r = 0; r < cfg_.rounds; ++r) {
      RoundLedger led;
      led.round = r;
      led.start_time = round_start;

      if (partial_) {
        for (std::size_t c : select_partial(r)) {
          deliver(c, static_cast<long>(r), led);
          start_training(c);
        }
      }

      while (buffer_.size() < quorum_) {
        if (clock_.empty()) throw ProtocolError(deadlock_report(r));
        const double t = clock_.peek().time;
        while (!clock_.empty() && clock_.peek().time == t) {
          const Event e = clock_.pop();
          if (e.generation != clients_[e.client].generation) continue;  // aborted
          finish_training(e.client);
        }
      }
      const double now = clock_.now();

      std::vector<Upload> uploads(std::make_move_iterator(buffer_.begin()),
                                  std::make_move_iterator(buffer_.begin() + static_cast<long>(quorum_)));
      buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<long>(quorum_));

      const ParamVector server_model =
          in_.skip_training || in_.server.size() == 0 ? global_ : server_train(global_, cfg_.local_epochs, r + 1);

      const std::vector<std::size_t> groups = group(uploads, r);
      std::vector<Participant> parts;
      double sparsity = 0.0;
      for (std::size_t j = 0; j < uploads.size(); ++j) {
        const auto& u = uploads[j];
        parts.push_back({std::cref(u.params), static_cast<double>(sizes_[u.client]), u.base, groups[j], u.client});
        led.participants.push_back(u.client);
        led.gaps.push_back(static_cast<long>(r) - u.base);
        led.uplink_bytes += u.cost.sent;
        led.uplink_dense_bytes += u.cost.dense;
        sparsity += u.sparsity;
      }
      led.upload_sparsity = sparsity / static_cast<double>(uploads.size());
      led.supervised_weight = schedule_(r);
      global_ = aggregate_with_weight(server_model, parts, r, led.supervised_weight, staleness_, cfg_.normalize).model;
      const long version = static_cast<long>(r) + 1;

      std::vector<bool> participated(m, false);
      for (const auto& u : uploads) {
        participated[u.client] = true;
        tracker.record(u.client, r);
      }
      std::vector<long> bases(m);
      for (std::size_t i = 0; i < m; ++i) {
        bases[i] = clients_[i].base;
        led.staleness.push_back(version - bases[i]);
      }

      const std::vector<double> freq = frequency(tracker, round_weight_, r);
      if (!partial_) {
        const auto classes = classify_clients(bases, participated, version, cfg_.staleness_tolerance);
        for (std::size_t i = 0; i < m; ++i) {
          if (classes[i] == ClientClass::kTolerable) continue;
          if (classes[i] == ClientClass::kDeprecated) led.forced.push_back(i);
          led.recipients.push_back(i);
          clients_[i].rate = cfg_.adaptive_lr ? adaptive_rate(freq[i], cfg_.learning_rate, m) : cfg_.learning_rate;
          deliver(i, version, led);
          start_training(i);  // aborts any in-flight call
        }
      }
      for (std::size_t i = 0; i < m; ++i) {
        led.post_gaps.push_back(version - clients_[i].base);
        led.learning_rates.push_back(clients_[i].rate);
      }

      if (in_.eval.size() > 0) {
        led.metrics = to_round_metrics(weighted_metrics(evaluate(global_, in_.spec, in_.eval)));
      }
      led.model_checksum = fnv1a(global_.values());
      led.end_time = now;
      round_start = now;
      if (in_.on_round) in_.on_round(led);
      result.rounds.push_back(std::move(led));

      if (cfg_.early_stopping && result.rounds.back().metrics) {
        const double acc = result.rounds.back().metrics->accuracy;
        if (acc > best_accuracy + cfg_.min_delta) {
          best_accuracy = acc;
          since_best = 0;
        } else if (++since_best >= cfg_.patience) {
          result.stopped_early = true;
          break;
        }
      }
    }

    result.model = global_;
    for (std::size_t i = 0; i < m; ++i) result.participation.push_back(tracker.rounds(i));
    return result;
  }

 private:
  ParamVector server_train(const ParamVector& start, std::size_t epochs, std::size_t tag) {
    auto opt = OptimizerState::make(cfg_.optimizer, cfg_.learning_rate, start.size());
    return server_supervised_training(start, in_.spec, in_.server, epochs, cfg_.batch_size, opt,
                                      derive_seed(cfg_.seed, Stream::kServerTrain, {tag}))
        .params;
  }

  void start_training(std::size_t c) {
    auto& st = clients_[c];
    const std::size_t attempt = st.attempts++;
    double d;
    if (in_.duration_override) {
      d = in_.duration_override(c, attempt);
    } else {
      Rng rng(derive_seed(cfg_.seed, Stream::kDuration, {c, attempt}));
      d = simulate_duration(durations_, sizes_[c], rng);
    }
    if (!(d >= 0.0) || !std::isfinite(d)) throw ProtocolError("invalid training duration for client " + std::to_string(c));
    st.training = true;
    st.train_rate = st.rate;
    ++st.generation;
    clock_.schedule({clock_.now() + d, c, EventKind::kTrainingDone, st.generation});
  }

  void finish_training(std::size_t c) {
    auto& st = clients_[c];
    st.training = false;
    Upload u;
    u.client = c;
    u.base = st.base;
    ParamVector trained;
    if (in_.skip_training || in_.clients[c].size() == 0) {
      trained = st.model;
      u.histogram.assign(in_.spec.classes(), 0);
    } else {
      auto opt = OptimizerState::make(cfg_.optimizer, st.train_rate, st.model.size());
      const std::uint64_t seed = derive_seed(cfg_.seed, Stream::kClientTrain,
                                             {c, static_cast<std::uint64_t>(st.base), st.attempts});
      auto res = client_local_training(st.model, in_.spec, in_.clients[c], pl_, opt, seed);
      trained = std::move(res.params);
      u.histogram = std::move(res.label_histogram);
    }
    if (cfg_.transport == TransportKind::kDense) {
      u.cost = dense_transfer_cost(trained.size());
      u.params = std::move(trained);
    } else {
      const SparseDelta delta = encode(trained.values(), st.model.values(),
                                       static_cast<std::uint32_t>(st.base), cfg_.zero_threshold);
      u.cost = transfer_cost(delta);
      u.sparsity = 1.0 - static_cast<double>(delta.nnz()) / static_cast<double>(std::max<std::size_t>(1, delta.length));
      u.params = ParamVector(decode(delta, st.model.values()), st.model.shapes());
    }
    // A newer upload from the same client replaces one still waiting.
    std::erase_if(buffer_, [c](const Upload& b) { return b.client == c; });
    buffer_.push_back(std::move(u));
  }

  void deliver(std::size_t c, long version, RoundLedger& led) {
    auto& st = clients_[c];
    TransferCost cost;
    if (cfg_.transport == TransportKind::kDense) {
      cost = dense_transfer_cost(global_.size());
      st.model = global_;
    } else {
      const SparseDelta delta = encode(global_.values(), st.model.values(),
                                       static_cast<std::uint32_t>(st.base), cfg_.zero_threshold);
      cost = transfer_cost(delta);
      st.model = ParamVector(decode(delta, st.model.values()), st.model.shapes());
    }
    st.base = version;
    led.downlink_bytes += cost.sent;
    led.downlink_dense_bytes += cost.dense;
  }

  std::vector<std::size_t> select_partial(std::size_t r) {
    std::vector<std::size_t> ids(cfg_.clients);
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    Rng rng(derive_seed(cfg_.seed, Stream::kSelection, {r}));
    shuffle(std::span<std::size_t>(ids), rng);
    ids.resize(quorum_);
    std::sort(ids.begin(), ids.end());
    return ids;
  }

  std::vector<std::size_t> group(const std::vector<Upload>& uploads, std::size_t r) const {
    if (cfg_.groups <= 1 || uploads.size() <= 1) return std::vector<std::size_t>(uploads.size(), 0);
    std::vector<ClientHistogram> hists;
    for (const auto& u : uploads) {
      if (cfg_.histogram_source == HistogramSource::kOracle) {
        if (in_.oracle_histograms.size() != cfg_.clients) throw ConfigError("oracle grouping needs client histograms");
        hists.push_back({u.client, in_.oracle_histograms[u.client]});
      } else {
        hists.push_back({u.client, normalized(u.histogram, in_.spec.classes())});
      }
    }
    GroupingConfig g;
    g.groups = cfg_.groups;
    g.source = cfg_.histogram_source;
    g.seed = derive_seed(cfg_.seed, Stream::kGrouping, {r});
    return group_clients(hists, g);
  }

  std::string deadlock_report(std::size_t r) const {
    std::ostringstream os;
    os << "no quorum can form in round " << r << ": " << buffer_.size() << " of " << quorum_
       << " uploads buffered, no pending events; clients:";
    for (std::size_t i = 0; i < clients_.size(); ++i) {
      os << " [" << i << " base=" << clients_[i].base << (clients_[i].training ? " training" : " idle") << "]";
    }
    return os.str();
  }

  const ExperimentConfig& cfg_;
  SimulationInputs in_;
  bool partial_ = false;
  std::size_t quorum_ = 1;
  std::vector<std::size_t> sizes_;
  DurationModel durations_;
  StalenessFunction staleness_ = StalenessFunction::constant();
  RoundWeightFunction round_weight_ = RoundWeightFunction::constant();
  SupervisedWeightSchedule schedule_;
  PseudoLabelConfig pl_;
  ParamVector global_;
  std::vector<ClientState> clients_;
  std::vector<Upload> buffer_;
  VirtualClock clock_;
};

}  // namespace

ExperimentResult simulate(const ExperimentConfig& cfg, const SimulationInputs& inputs) {
  return Simulation(cfg, inputs).run();
}

SimulationInputs Scenario::inputs() const {
  SimulationInputs in;
  in.spec = spec;
  for (const auto& rows : partition.clients) in.clients.emplace_back(data.features, rows);
  in.server = LabeledView(data, partition.server);
  in.eval = LabeledView(data, split.test);
  for (const auto& h : partition.histograms) in.oracle_histograms.push_back(normalized(h, data.classes()));
  return in;
}

Scenario build_scenario(const ExperimentConfig& cfg) {
  cfg.validate();
  Scenario s;
  if (cfg.scenario == ScenarioKind::kSynthetic) {
    SyntheticSpec syn;
    syn.classes = cfg.synthetic_classes;
    syn.per_class = cfg.synthetic_per_class;
    syn.feature_dim = cfg.synthetic_features;
    syn.separation = cfg.synthetic_separation;
    syn.seed = derive_seed(cfg.seed, Stream::kSynthetic, {});
    s.data = make_synthetic(syn);
  } else {
    CsvSchema schema;
    schema.label_column = cfg.label_column;
    auto csv = load_csv(cfg.data_path, schema);
    s.data = std::move(csv.data);
    s.load_report = csv.report;
  }
  s.split = stratified_split(s.data, cfg.test_fraction, derive_seed(cfg.seed, Stream::kPartition, {0}));
  Standardizer::fit(s.data.features, s.split.train).apply(s.data.features);

  if (cfg.scenario == ScenarioKind::kSynthetic) {
    DirichletPartitionConfig d;
    d.clients = cfg.clients;
    d.alpha = cfg.dirichlet_alpha;
    d.size_ratio = cfg.size_ratio;
    d.server_fraction = cfg.server_fraction;
    d.seed = derive_seed(cfg.seed, Stream::kPartition, {1});
    s.partition = partition_dirichlet(s.data, s.split.train, d);
  } else {
    const std::filesystem::path quota_path =
        cfg.quota_path.empty() ? shipped_quota_path(to_string(cfg.scenario)) : std::filesystem::path(cfg.quota_path);
    const QuotaTable quotas = load_quota_csv(quota_path, s.data.class_names);
    if (quotas.clients() != cfg.clients) {
      throw ValidationError("clients", "quota table lists " + std::to_string(quotas.clients()) + " clients");
    }
    s.partition = partition_by_quota(s.data, s.split.train, quotas, cfg.server_fraction,
                                     derive_seed(cfg.seed, Stream::kPartition, {1}));
  }
  fill_entropy(s.partition, cfg.scenario == ScenarioKind::kSynthetic ? s.data.classes() : kQuotaEntropyClasses);

  s.spec.widths.push_back(s.data.feature_dim());
  for (auto w : cfg.hidden_layers) s.spec.widths.push_back(w);
  s.spec.widths.push_back(s.data.classes());
  s.spec.dropout = cfg.dropout;
  s.spec.l1 = cfg.l1;
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  const Scenario s = build_scenario(cfg);
  return simulate(cfg, s.inputs());
}

}  // namespace feds3a
