#include "feds3a/config.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "feds3a/error.hpp"

namespace feds3a {

using nlohmann::json;

namespace {

constexpr double kHalfE = std::numbers::e / 2.0;

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

constexpr EnumName<ScenarioKind> kScenarios[] = {
    {ScenarioKind::kBasic, "basic"}, {ScenarioKind::kBalanced, "balanced"}, {ScenarioKind::kSynthetic, "synthetic"}};
constexpr EnumName<TransportKind> kTransports[] = {{TransportKind::kSparse, "sparse"},
                                                   {TransportKind::kDense, "dense"}};
constexpr EnumName<BaselineMode> kBaselines[] = {{BaselineMode::kFedS3A, "feds3a"},
                                                 {BaselineMode::kFedAvgPartial, "fedavg-partial"},
                                                 {BaselineMode::kFedAvgAll, "fedavg-all"},
                                                 {BaselineMode::kFedAsync, "fedasync"}};
constexpr EnumName<OptimizerKind> kOptimizers[] = {{OptimizerKind::kSgd, "sgd"}, {OptimizerKind::kAdam, "adam"}};
constexpr EnumName<HistogramSource> kSources[] = {{HistogramSource::kPseudoLabel, "pseudo-label"},
                                                  {HistogramSource::kOracle, "oracle"}};

template <typename E, std::size_t N>
std::string enum_name(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table) {
    if (e.value == v) return e.name;
  }
  return "?";
}

template <typename E, std::size_t N>
E enum_parse(const EnumName<E> (&table)[N], const std::string& field, const std::string& text) {
  std::string options;
  for (const auto& e : table) {
    if (text == e.name) return e.value;
    options += (options.empty() ? "" : ", ") + std::string(e.name);
  }
  throw ValidationError(field, "unknown value '" + text + "' (expected one of " + options + ")");
}

std::string as_string(const std::string& field, const json& v) {
  if (!v.is_string()) throw ValidationError(field, "expected a string");
  return v.get<std::string>();
}

double as_double(const std::string& field, const json& v) {
  if (!v.is_number()) throw ValidationError(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ValidationError(field, "must be finite");
  return d;
}

std::uint64_t as_uint(const std::string& field, const json& v) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw ValidationError(field, "must be nonnegative");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw ValidationError(field, "expected a nonnegative integer");
}

bool as_bool(const std::string& field, const json& v) {
  if (!v.is_boolean()) throw ValidationError(field, "expected true or false");
  return v.get<bool>();
}

struct Field {
  ConfigField info;
  std::function<void(ExperimentConfig&, const json&)> set;
  std::function<json(const ExperimentConfig&)> get;
};

#define FEDS3A_DOUBLE(key, help)                                                    \
  Field {                                                                            \
    {#key, help}, [](ExperimentConfig& c, const json& v) { c.key = as_double(#key, v); }, \
        [](const ExperimentConfig& c) { return json(c.key); }                        \
  }
#define FEDS3A_SIZE(key, help)                                                                         \
  Field {                                                                                               \
    {#key, help}, [](ExperimentConfig& c, const json& v) { c.key = static_cast<std::size_t>(as_uint(#key, v)); }, \
        [](const ExperimentConfig& c) { return json(c.key); }                                           \
  }
#define FEDS3A_BOOL(key, help)                                                    \
  Field {                                                                          \
    {#key, help}, [](ExperimentConfig& c, const json& v) { c.key = as_bool(#key, v); }, \
        [](const ExperimentConfig& c) { return json(c.key); }                      \
  }
#define FEDS3A_STRING(key, help)                                                    \
  Field {                                                                            \
    {#key, help}, [](ExperimentConfig& c, const json& v) { c.key = as_string(#key, v); }, \
        [](const ExperimentConfig& c) { return json(c.key); }                        \
  }
#define FEDS3A_ENUM(key, table, help)                                                                   \
  Field {                                                                                               \
    {#key, help}, [](ExperimentConfig& c, const json& v) { c.key = enum_parse(table, #key, as_string(#key, v)); }, \
        [](const ExperimentConfig& c) { return json(enum_name(table, c.key)); }                        \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      FEDS3A_ENUM(scenario, kScenarios, "data scenario: basic, balanced or synthetic"),
      FEDS3A_SIZE(clients, "number of clients"),
      FEDS3A_DOUBLE(participation, "fraction of clients that triggers aggregation, in (0, 1]"),
      FEDS3A_SIZE(staleness_tolerance, "rounds a client may lag before it is force-updated"),
      FEDS3A_SIZE(rounds, "global rounds"),
      FEDS3A_DOUBLE(threshold, "pseudo-label confidence threshold, in (0, 1]"),
      FEDS3A_SIZE(batch_size, "mini-batch size"),
      FEDS3A_SIZE(local_epochs, "client epochs per training call"),
      FEDS3A_SIZE(server_epochs, "server warm-up epochs before the first round"),
      FEDS3A_ENUM(optimizer, kOptimizers, "sgd or adam"),
      FEDS3A_DOUBLE(learning_rate, "base learning rate"),
      FEDS3A_DOUBLE(sw_alpha, "initial supervised weight"),
      FEDS3A_DOUBLE(sw_beta, "final supervised weight (default 1 / (quorum + 1))"),
      FEDS3A_DOUBLE(sw_decay, "supervised weight decay per round"),
      Field{{"staleness_function", "constant, polynomial, hinge or exponential"},
            [](ExperimentConfig& c, const json& v) {
              try {
                c.staleness_function = StalenessFunction::parse(as_string("staleness_function", v));
              } catch (const ValidationError&) {
                throw;
              } catch (const std::exception& e) {
                throw ValidationError("staleness_function", e.what());
              }
            },
            [](const ExperimentConfig& c) { return json(StalenessFunction::name(c.staleness_function)); }},
      FEDS3A_DOUBLE(staleness_a, "staleness function parameter a"),
      FEDS3A_DOUBLE(staleness_b, "hinge staleness offset b"),
      Field{{"round_weight_function", "constant, logarithmic, polynomial, exponential-smoothing or exponential"},
            [](ExperimentConfig& c, const json& v) {
              try {
                c.round_weight_function = RoundWeightFunction::parse(as_string("round_weight_function", v));
              } catch (const ValidationError&) {
                throw;
              } catch (const std::exception& e) {
                throw ValidationError("round_weight_function", e.what());
              }
            },
            [](const ExperimentConfig& c) { return json(RoundWeightFunction::name(c.round_weight_function)); }},
      FEDS3A_DOUBLE(round_weight_a, "round weight parameter a"),
      FEDS3A_BOOL(adaptive_lr, "scale client learning rates by participation frequency"),
      FEDS3A_SIZE(groups, "number of client groups"),
      FEDS3A_ENUM(histogram_source, kSources, "class histograms used for grouping: pseudo-label or oracle"),
      FEDS3A_BOOL(normalize, "renormalize staleness-discounted weights within each group"),
      FEDS3A_DOUBLE(l1, "L1 penalty on the weights"),
      FEDS3A_DOUBLE(zero_threshold, "delta entries at or below this magnitude are not sent"),
      FEDS3A_ENUM(transport, kTransports, "sparse or dense model exchange"),
      FEDS3A_ENUM(baseline, kBaselines, "feds3a, fedavg-partial, fedavg-all or fedasync"),
      Field{{"seed", "master seed"},
            [](ExperimentConfig& c, const json& v) { c.seed = as_uint("seed", v); },
            [](const ExperimentConfig& c) { return json(c.seed); }},
      FEDS3A_SIZE(repetitions, "independent runs with derived seeds"),
      FEDS3A_DOUBLE(server_fraction, "share of the data held by the server as labeled data"),
      FEDS3A_STRING(data_path, "CSV with flow features and a label column"),
      FEDS3A_STRING(label_column, "label column name"),
      FEDS3A_STRING(quota_path, "client,class,count table (default: the shipped table)"),
      FEDS3A_DOUBLE(test_fraction, "held-out evaluation share"),
      FEDS3A_SIZE(synthetic_classes, "classes in the synthetic scenario"),
      FEDS3A_SIZE(synthetic_per_class, "rows per class in the synthetic scenario"),
      FEDS3A_SIZE(synthetic_features, "feature dimension in the synthetic scenario"),
      FEDS3A_DOUBLE(synthetic_separation, "distance between synthetic class centres"),
      FEDS3A_DOUBLE(dirichlet_alpha, "Dirichlet concentration of client class shares"),
      FEDS3A_DOUBLE(size_ratio, "largest over smallest client size"),
      Field{{"hidden_layers", "hidden layer widths, e.g. [64,32]"},
            [](ExperimentConfig& c, const json& v) {
              if (!v.is_array()) throw ValidationError("hidden_layers", "expected an array of widths");
              c.hidden_layers.clear();
              for (const auto& w : v) c.hidden_layers.push_back(static_cast<std::size_t>(as_uint("hidden_layers", w)));
            },
            [](const ExperimentConfig& c) { return json(c.hidden_layers); }},
      FEDS3A_DOUBLE(dropout, "dropout rate on hidden layers"),
      FEDS3A_DOUBLE(duration_target, "virtual seconds the largest client needs per training call"),
      FEDS3A_DOUBLE(duration_exponent, "exponent of data size in the duration model"),
      FEDS3A_DOUBLE(duration_jitter, "log-normal sigma of training durations"),
      FEDS3A_DOUBLE(spike_probability, "chance that a training call is slowed by spike_factor"),
      FEDS3A_DOUBLE(spike_factor, "slowdown applied by a spike"),
      FEDS3A_BOOL(early_stopping, "stop when accuracy stops improving"),
      FEDS3A_SIZE(patience, "rounds without improvement before stopping"),
      FEDS3A_DOUBLE(min_delta, "smallest accuracy gain that counts as improvement"),
  };
  return table;
}

#undef FEDS3A_DOUBLE
#undef FEDS3A_SIZE
#undef FEDS3A_BOOL
#undef FEDS3A_STRING
#undef FEDS3A_ENUM

const Field* find_field(const std::string& name) {
  for (const auto& f : fields()) {
    if (f.info.name == name) return &f;
  }
  return nullptr;
}

double default_staleness_a(StalenessFunction::Kind k) {
  switch (k) {
    case StalenessFunction::Kind::kPolynomial: return 0.5;
    case StalenessFunction::Kind::kHinge: return 1.0;
    case StalenessFunction::Kind::kExponential: return kHalfE;
    case StalenessFunction::Kind::kConstant: return 0.0;
  }
  return 0.0;
}

double default_round_weight_a(RoundWeightFunction::Kind k) {
  switch (k) {
    case RoundWeightFunction::Kind::kPolynomial: return 0.5;
    case RoundWeightFunction::Kind::kExponentialSmoothing: return 0.1;
    case RoundWeightFunction::Kind::kExponential: return kHalfE;
    default: return 0.0;
  }
}

void check(bool ok, const char* field, const std::string& msg) {
  if (!ok) throw ValidationError(field, msg);
}

}  // namespace

std::string to_string(ScenarioKind v) { return enum_name(kScenarios, v); }
std::string to_string(TransportKind v) { return enum_name(kTransports, v); }
std::string to_string(BaselineMode v) { return enum_name(kBaselines, v); }
std::string to_string(OptimizerKind v) { return enum_name(kOptimizers, v); }
std::string to_string(HistogramSource v) { return enum_name(kSources, v); }

std::size_t ExperimentConfig::quorum() const {
  const double q = std::ceil(participation * static_cast<double>(clients) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(q));
}

StalenessFunction ExperimentConfig::staleness() const {
  switch (staleness_function) {
    case StalenessFunction::Kind::kConstant: return StalenessFunction::constant();
    case StalenessFunction::Kind::kPolynomial: return StalenessFunction::polynomial(staleness_a);
    case StalenessFunction::Kind::kHinge: return StalenessFunction::hinge(staleness_a, staleness_b);
    case StalenessFunction::Kind::kExponential: return StalenessFunction::exponential(staleness_a);
  }
  return StalenessFunction::constant();
}

RoundWeightFunction ExperimentConfig::round_weight() const {
  switch (round_weight_function) {
    case RoundWeightFunction::Kind::kConstant: return RoundWeightFunction::constant();
    case RoundWeightFunction::Kind::kLogarithmic: return RoundWeightFunction::logarithmic();
    case RoundWeightFunction::Kind::kPolynomial: return RoundWeightFunction::polynomial(round_weight_a);
    case RoundWeightFunction::Kind::kExponentialSmoothing:
      return RoundWeightFunction::exponential_smoothing(round_weight_a);
    case RoundWeightFunction::Kind::kExponential: return RoundWeightFunction::exponential(round_weight_a);
  }
  return RoundWeightFunction::constant();
}

SupervisedWeightSchedule ExperimentConfig::supervised_weight() const {
  SupervisedWeightSchedule s;
  s.alpha = sw_alpha;
  s.beta = sw_beta;
  s.decay = sw_decay;
  return s;
}

void ExperimentConfig::validate() const {
  check(clients >= 2, "clients", "need at least 2 clients");
  check(participation > 0.0 && participation <= 1.0, "participation", "must lie in (0, 1]");
  check(rounds >= 1, "rounds", "must be at least 1");
  check(threshold > 0.0 && threshold <= 1.0, "threshold", "must lie in (0, 1]");
  check(batch_size >= 1, "batch_size", "must be at least 1");
  check(local_epochs >= 1, "local_epochs", "must be at least 1");
  check(learning_rate > 0.0, "learning_rate", "must be positive");
  check(sw_alpha > 0.0 && sw_alpha < 1.0, "sw_alpha", "must lie in (0, 1)");
  check(sw_beta > 0.0 && sw_beta <= sw_alpha, "sw_beta", "must lie in (0, sw_alpha]");
  check(sw_decay >= 0.0 && sw_decay < 1.0, "sw_decay", "must lie in [0, 1)");
  try {
    staleness().validate();
  } catch (const ConfigError& e) {
    throw ValidationError("staleness_a", e.what());
  }
  try {
    round_weight().validate();
  } catch (const ConfigError& e) {
    throw ValidationError("round_weight_a", e.what());
  }
  check(groups >= 1, "groups", "must be at least 1");
  check(l1 >= 0.0, "l1", "must be nonnegative");
  check(zero_threshold >= 0.0, "zero_threshold", "must be nonnegative");
  check(repetitions >= 1, "repetitions", "must be at least 1");
  check(server_fraction > 0.0 && server_fraction < 1.0, "server_fraction", "must lie in (0, 1)");
  check(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction", "must lie in (0, 1)");
  check(!label_column.empty(), "label_column", "must not be empty");
  if (scenario != ScenarioKind::kSynthetic) {
    check(!data_path.empty(), "data_path", "required for the " + to_string(scenario) + " scenario");
  }
  check(synthetic_classes >= 2, "synthetic_classes", "need at least 2 classes");
  check(synthetic_per_class >= 1, "synthetic_per_class", "must be at least 1");
  check(synthetic_features >= synthetic_classes, "synthetic_features", "must be at least synthetic_classes");
  check(synthetic_separation > 0.0, "synthetic_separation", "must be positive");
  check(dirichlet_alpha > 0.0, "dirichlet_alpha", "must be positive");
  check(size_ratio >= 1.0, "size_ratio", "must be at least 1");
  for (auto w : hidden_layers) check(w >= 1, "hidden_layers", "widths must be at least 1");
  check(dropout >= 0.0 && dropout < 1.0, "dropout", "must lie in [0, 1)");
  check(duration_target > 0.0, "duration_target", "must be positive");
  check(duration_exponent >= 0.0, "duration_exponent", "must be nonnegative");
  check(duration_jitter >= 0.0, "duration_jitter", "must be nonnegative");
  check(spike_probability >= 0.0 && spike_probability <= 1.0, "spike_probability", "must lie in [0, 1]");
  check(spike_factor >= 1.0, "spike_factor", "must be at least 1");
  check(min_delta >= 0.0, "min_delta", "must be nonnegative");
}

ExperimentConfig defaults_for(ScenarioKind scenario) {
  ExperimentConfig c;
  c.scenario = scenario;
  if (scenario == ScenarioKind::kBalanced) {
    c.staleness_function = StalenessFunction::Kind::kPolynomial;
    c.staleness_a = 0.5;
    c.round_weight_function = RoundWeightFunction::Kind::kExponentialSmoothing;
    c.round_weight_a = 0.1;
  }
  c.sw_beta = 1.0 / static_cast<double>(c.quorum() + 1);
  return c;
}

void apply_baseline(ExperimentConfig& c) {
  switch (c.baseline) {
    case BaselineMode::kFedS3A:
      return;
    case BaselineMode::kFedAvgAll:
      c.participation = 1.0;
      c.staleness_tolerance = 0;
      c.staleness_function = StalenessFunction::Kind::kConstant;
      c.staleness_a = 0.0;
      c.staleness_b = 0.0;
      c.round_weight_function = RoundWeightFunction::Kind::kConstant;
      c.round_weight_a = 0.0;
      c.adaptive_lr = false;
      c.groups = 1;
      c.transport = TransportKind::kDense;
      return;
    case BaselineMode::kFedAsync:
      c.participation = 1.0 / static_cast<double>(c.clients);
      c.staleness_tolerance = 16;
      c.staleness_function = StalenessFunction::Kind::kPolynomial;
      c.staleness_a = 0.5;
      c.staleness_b = 0.0;
      c.adaptive_lr = false;
      c.groups = 1;
      c.transport = TransportKind::kDense;
      return;
    case BaselineMode::kFedAvgPartial:
      c.staleness_tolerance = 0;
      c.staleness_function = StalenessFunction::Kind::kConstant;
      c.staleness_a = 0.0;
      c.staleness_b = 0.0;
      c.round_weight_function = RoundWeightFunction::Kind::kConstant;
      c.round_weight_a = 0.0;
      c.adaptive_lr = false;
      c.groups = 1;
      c.transport = TransportKind::kDense;
      return;
  }
}

ExperimentConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config", "expected a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (!find_field(key)) throw ValidationError(key, "unknown field");
  }
  ScenarioKind scenario = ScenarioKind::kSynthetic;
  if (doc.contains("scenario")) scenario = enum_parse(kScenarios, "scenario", as_string("scenario", doc["scenario"]));
  ExperimentConfig c = defaults_for(scenario);

  // Choosing a function brings its usual parameter unless one is given.
  if (doc.contains("staleness_function")) {
    find_field("staleness_function")->set(c, doc["staleness_function"]);
    c.staleness_a = default_staleness_a(c.staleness_function);
    c.staleness_b = 0.0;
  }
  if (doc.contains("round_weight_function")) {
    find_field("round_weight_function")->set(c, doc["round_weight_function"]);
    c.round_weight_a = default_round_weight_a(c.round_weight_function);
  }
  for (const auto& f : fields()) {
    if (f.info.name == "scenario" || f.info.name == "staleness_function" ||
        f.info.name == "round_weight_function" || f.info.name == "sw_beta") {
      continue;
    }
    if (doc.contains(f.info.name)) f.set(c, doc[f.info.name]);
  }
  apply_baseline(c);
  if (doc.contains("sw_beta")) {
    find_field("sw_beta")->set(c, doc["sw_beta"]);
  } else {
    c.sw_beta = 1.0 / static_cast<double>(c.quorum() + 1);
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& cfg) {
  json out = json::object();
  for (const auto& f : fields()) out[f.info.name] = f.get(cfg);
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config", std::string("malformed JSON: ") + e.what());
  }
  return config_from_json(doc);
}

ExperimentConfig parse_and_validate(const std::filesystem::path* file,
                                    const std::map<std::string, std::string>& overrides) {
  json doc = json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) throw IoError("cannot open config " + file->string());
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ValidationError("config", std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ValidationError("config", "expected a JSON object");
  }
  for (const auto& [key, text] : overrides) {
    json v = json::parse(text, nullptr, false);
    if (v.is_discarded()) v = text;
    doc[key] = v;
  }
  return config_from_json(doc);
}

const std::vector<ConfigField>& config_fields() {
  static const std::vector<ConfigField> out = [] {
    std::vector<ConfigField> v;
    for (const auto& f : fields()) v.push_back(f.info);
    return v;
  }();
  return out;
}

}  // namespace feds3a
