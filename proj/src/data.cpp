#include "feds3a/data.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "feds3a/error.hpp"
#include "feds3a/rng.hpp"

namespace feds3a {

Matrix UnlabeledView::gather(std::span<const std::size_t> which) const {
  Matrix out(which.size(), feature_dim());
  for (std::size_t r = 0; r < which.size(); ++r) {
    const auto src = row(which[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

LabeledView LabeledView::all(const Dataset& data) {
  std::vector<std::size_t> rows(data.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return LabeledView(data, std::move(rows));
}

Matrix LabeledView::gather(std::span<const std::size_t> which) const {
  Matrix out(which.size(), feature_dim());
  for (std::size_t r = 0; r < which.size(); ++r) {
    const auto src = row(which[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix LabeledView::gather_targets(std::span<const std::size_t> which) const {
  Matrix out(which.size(), classes());
  for (std::size_t r = 0; r < which.size(); ++r) out(r, static_cast<std::size_t>(label(which[r]))) = 1.0;
  return out;
}

Standardizer Standardizer::fit(const Matrix& features, std::span<const std::size_t> rows) {
  Standardizer s;
  const std::size_t d = features.cols();
  s.mean.assign(d, 0.0);
  s.stddev.assign(d, 1.0);
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  for (auto r : rows) {
    const auto x = features.row(r);
    for (std::size_t c = 0; c < d; ++c) s.mean[c] += x[c];
  }
  for (auto& m : s.mean) m /= n;
  std::vector<double> var(d, 0.0);
  for (auto r : rows) {
    const auto x = features.row(r);
    for (std::size_t c = 0; c < d; ++c) var[c] += (x[c] - s.mean[c]) * (x[c] - s.mean[c]);
  }
  for (std::size_t c = 0; c < d; ++c) {
    const double sd = std::sqrt(var[c] / n);
    s.stddev[c] = sd > 1e-12 ? sd : 1.0;  // constant columns map to 0
  }
  return s;
}

void Standardizer::apply(Matrix& features) const {
  if (features.cols() != mean.size()) throw ConfigError("standardizer width mismatch");
  for (std::size_t r = 0; r < features.rows(); ++r) {
    auto x = features.row(r);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = (x[c] - mean[c]) / stddev[c];
  }
}

std::vector<std::string> default_ids_classes() {
  return {"BENIGN",        "DoS Hulk",    "PortScan",    "DDoS",           "DoS GoldenEye",
          "FTP-Patator",   "SSH-Patator", "DoS slowloris", "DoS Slowhttptest"};
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == ',' && !quoted) {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r' && c != '\n') {
      field.push_back(c);
    }
  }
  out.push_back(std::move(field));
  return out;
}

enum class Cell { kOk, kNonFinite, kMalformed };

Cell parse_cell(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return Cell::kNonFinite;
  const std::string l = lower(s);
  if (l == "nan" || l == "inf" || l == "-inf" || l == "+inf" || l == "infinity" ||
      l == "-infinity" || l == "+infinity") {
    return Cell::kNonFinite;
  }
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) return Cell::kMalformed;
  if (!std::isfinite(out) || errno == ERANGE) return Cell::kNonFinite;
  return Cell::kOk;
}

}  // namespace

CsvDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": missing header row");
  std::vector<std::string> header = split_csv_line(line);
  for (auto& h : header) h = trim(h);

  auto find = [&](const std::string& name) -> std::ptrdiff_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == trim(name)) return static_cast<std::ptrdiff_t>(i);
    }
    return -1;
  };
  const auto label_idx = find(schema.label_column);
  if (label_idx < 0) throw SchemaError("unknown column: " + schema.label_column);

  std::vector<std::size_t> feature_idx;
  if (schema.feature_columns.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (static_cast<std::ptrdiff_t>(i) != label_idx) feature_idx.push_back(i);
    }
  } else {
    std::vector<std::string> missing;
    for (const auto& name : schema.feature_columns) {
      const auto idx = find(name);
      if (idx < 0) missing.push_back(name);
      else feature_idx.push_back(static_cast<std::size_t>(idx));
    }
    if (!missing.empty()) {
      std::string msg = "unknown column(s):";
      for (const auto& m : missing) msg += " '" + m + "'";
      throw SchemaError(msg);
    }
  }
  if (feature_idx.empty()) throw SchemaError("no feature columns");

  std::map<std::string, int> class_of;
  for (std::size_t k = 0; k < schema.classes.size(); ++k) {
    class_of[lower(trim(schema.classes[k]))] = static_cast<int>(k);
  }

  CsvDataset out;
  out.data.class_names = schema.classes;
  std::vector<double> values;
  std::vector<double> row_values(feature_idx.size());
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++out.report.rows_read;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      ++out.report.dropped_malformed;
      continue;
    }
    Cell status = Cell::kOk;
    for (std::size_t j = 0; j < feature_idx.size() && status != Cell::kMalformed; ++j) {
      const Cell c = parse_cell(fields[feature_idx[j]], row_values[j]);
      if (c != Cell::kOk) status = c;
    }
    if (status == Cell::kMalformed) {
      ++out.report.dropped_malformed;
      continue;
    }
    if (status == Cell::kNonFinite) {
      ++out.report.dropped_nonfinite;
      continue;
    }
    const auto it = class_of.find(lower(trim(fields[static_cast<std::size_t>(label_idx)])));
    if (it == class_of.end()) {
      ++out.report.dropped_class;
      continue;
    }
    values.insert(values.end(), row_values.begin(), row_values.end());
    out.data.labels.push_back(it->second);
  }
  if (out.data.labels.empty()) throw InputError(path.string() + ": no usable rows");
  out.data.features = Matrix(out.data.labels.size(), feature_idx.size());
  std::copy(values.begin(), values.end(), out.data.features.data().begin());
  return out;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 2) throw ConfigError("synthetic data needs at least two classes");
  if (spec.feature_dim < spec.classes) {
    throw ConfigError("synthetic feature_dim must be >= classes");
  }
  if (!(spec.separation >= 0.0)) throw ConfigError("separation must be >= 0");
  Dataset d;
  for (std::size_t k = 0; k < spec.classes; ++k) d.class_names.push_back("class" + std::to_string(k));
  const std::size_t n = spec.classes * spec.per_class;
  d.features = Matrix(n, spec.feature_dim);
  d.labels.resize(n);
  Rng rng(derive_seed(spec.seed, Stream::kSynthetic, {}));
  const double offset = spec.separation / std::sqrt(2.0);
  // Interleave classes so that any prefix is roughly balanced.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % spec.classes;
    d.labels[i] = static_cast<int>(k);
    auto x = d.features.row(i);
    for (std::size_t c = 0; c < spec.feature_dim; ++c) x[c] = rng.normal();
    x[k] += offset;
  }
  return d;
}

QuotaTable load_quota_csv(const std::filesystem::path& path,
                          const std::vector<std::string>& class_names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty quota file");
  auto header = split_csv_line(line);
  for (auto& h : header) h = lower(trim(h));
  if (header != std::vector<std::string>{"client", "class", "count"}) {
    throw SchemaError(path.string() + ": quota header must be client,class,count");
  }
  std::map<std::string, std::size_t> class_of;
  for (std::size_t k = 0; k < class_names.size(); ++k) class_of[lower(trim(class_names[k]))] = k;

  QuotaTable q;
  q.class_names = class_names;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw InputError(path.string() + ": malformed quota row '" + line + "'");
    const auto cls = class_of.find(lower(trim(f[1])));
    if (cls == class_of.end()) throw SchemaError(path.string() + ": unknown class '" + trim(f[1]) + "'");
    char* end = nullptr;
    const std::string cs = trim(f[0]), ns = trim(f[2]);
    const unsigned long client = std::strtoul(cs.c_str(), &end, 10);
    if (cs.empty() || *end) throw InputError(path.string() + ": bad client id '" + cs + "'");
    const unsigned long count = std::strtoul(ns.c_str(), &end, 10);
    if (ns.empty() || *end) throw InputError(path.string() + ": bad count '" + ns + "'");
    if (q.counts.size() <= client) q.counts.resize(client + 1, std::vector<std::size_t>(class_names.size(), 0));
    q.counts[client][cls->second] = count;
  }
  return q;
}

std::filesystem::path shipped_quota_path(const std::string& scenario) {
  return std::filesystem::path(FEDS3A_DATA_DIR) / ("quotas_" + scenario + ".csv");
}

namespace {

std::vector<std::vector<std::size_t>> rows_by_class(const Dataset& data,
                                                    std::span<const std::size_t> pool, Rng& rng) {
  std::vector<std::vector<std::size_t>> by(data.classes());
  for (auto r : pool) by.at(static_cast<std::size_t>(data.labels[r])).push_back(r);
  for (auto& v : by) shuffle(std::span<std::size_t>(v), rng);
  return by;
}

std::vector<std::size_t> histogram_of(const Dataset& data, std::span<const std::size_t> rows) {
  std::vector<std::size_t> h(data.classes(), 0);
  for (auto r : rows) ++h[static_cast<std::size_t>(data.labels[r])];
  return h;
}

// Largest-remainder rounding of nonnegative reals to integers summing to `total`.
std::vector<std::size_t> round_to_total(std::span<const double> x, std::size_t total) {
  std::vector<std::size_t> out(x.size());
  const double sum = std::accumulate(x.begin(), x.end(), 0.0);
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double share = sum > 0 ? x[i] / sum * static_cast<double>(total) : 0.0;
    out[i] = static_cast<std::size_t>(std::floor(share));
    assigned += out[i];
    rem.emplace_back(share - std::floor(share), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t j = 0; assigned < total && j < rem.size(); ++j, ++assigned) ++out[rem[j].second];
  return out;
}

}  // namespace

ScenarioPartition partition_by_quota(const Dataset& data, std::span<const std::size_t> pool,
                                     const QuotaTable& quotas, double server_fraction,
                                     std::uint64_t seed) {
  if (quotas.clients() < 2) throw PartitionError("quota table needs at least two clients");
  if (quotas.class_names.size() != data.classes()) throw PartitionError("quota classes differ from dataset classes");
  if (!(server_fraction > 0.0 && server_fraction < 1.0)) throw PartitionError("server fraction must lie in (0, 1)");
  Rng rng(derive_seed(seed, Stream::kPartition, {1}));
  auto by = rows_by_class(data, pool, rng);

  ScenarioPartition part;
  part.clients.resize(quotas.clients());
  std::vector<std::size_t> cursor(data.classes(), 0);
  for (std::size_t k = 0; k < data.classes(); ++k) {
    std::size_t need = 0;
    for (const auto& row : quotas.counts) need += row[k];
    if (need > by[k].size()) {
      throw PartitionError("class '" + data.class_names[k] + "' has " + std::to_string(by[k].size()) +
                           " rows but the quotas need " + std::to_string(need));
    }
    for (std::size_t i = 0; i < quotas.clients(); ++i) {
      for (std::size_t j = 0; j < quotas.counts[i][k]; ++j) part.clients[i].push_back(by[k][cursor[k]++]);
    }
  }
  std::size_t client_total = 0;
  for (const auto& c : part.clients) client_total += c.size();
  const auto wanted = static_cast<std::size_t>(
      std::llround(server_fraction / (1.0 - server_fraction) * static_cast<double>(client_total)));
  std::vector<double> remaining(data.classes());
  std::size_t remaining_total = 0;
  for (std::size_t k = 0; k < data.classes(); ++k) {
    remaining[k] = static_cast<double>(by[k].size() - cursor[k]);
    remaining_total += by[k].size() - cursor[k];
  }
  const auto take = round_to_total(remaining, std::min(wanted, remaining_total));
  for (std::size_t k = 0; k < data.classes(); ++k) {
    for (std::size_t j = 0; j < std::min(take[k], by[k].size() - cursor[k]); ++j) {
      part.server.push_back(by[k][cursor[k]++]);
    }
  }
  if (part.server.empty()) throw PartitionError("no rows left for the server's labeled split");
  for (auto& c : part.clients) std::sort(c.begin(), c.end());
  std::sort(part.server.begin(), part.server.end());
  for (const auto& c : part.clients) part.histograms.push_back(histogram_of(data, c));
  fill_entropy(part, data.classes());
  return part;
}

ScenarioPartition partition_dirichlet(const Dataset& data, std::span<const std::size_t> pool,
                                      const DirichletPartitionConfig& cfg) {
  if (cfg.clients < 2) throw PartitionError("need at least two clients");
  if (!(cfg.alpha > 0.0)) throw PartitionError("Dirichlet concentration must be positive");
  if (!(cfg.size_ratio >= 1.0)) throw PartitionError("size ratio must be >= 1");
  if (!(cfg.server_fraction > 0.0 && cfg.server_fraction < 1.0)) {
    throw PartitionError("server fraction must lie in (0, 1)");
  }
  Rng rng(derive_seed(cfg.seed, Stream::kPartition, {2}));
  auto by = rows_by_class(data, pool, rng);
  const std::size_t K = data.classes();
  const std::size_t M = cfg.clients;

  ScenarioPartition part;
  std::vector<std::size_t> cursor(K, 0);
  for (std::size_t k = 0; k < K; ++k) {
    const auto n = static_cast<std::size_t>(std::llround(cfg.server_fraction * static_cast<double>(by[k].size())));
    for (std::size_t j = 0; j < n; ++j) part.server.push_back(by[k][cursor[k]++]);
  }
  std::vector<double> col(K);
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    col[k] = static_cast<double>(by[k].size() - cursor[k]);
    total += col[k];
  }
  if (total < static_cast<double>(M)) throw PartitionError("not enough rows for every client");

  std::vector<double> size(M);
  double wsum = 0.0;
  for (std::size_t i = 0; i < M; ++i) {
    size[i] = std::pow(cfg.size_ratio, -static_cast<double>(i) / static_cast<double>(M - 1));
    wsum += size[i];
  }
  for (auto& s : size) s = s / wsum * total;

  // Dirichlet class proportions per client, then Sinkhorn balancing so the
  // client sizes and the per-class supply are both met.
  std::vector<std::vector<double>> a(M, std::vector<double>(K));
  std::gamma_distribution<double> gamma(cfg.alpha, 1.0);
  for (std::size_t i = 0; i < M; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < K; ++k) s += a[i][k] = std::max(gamma(rng.engine()), 1e-12);
    for (std::size_t k = 0; k < K; ++k) a[i][k] = a[i][k] / s * size[i];
  }
  for (int iter = 0; iter < 500; ++iter) {
    for (std::size_t k = 0; k < K; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < M; ++i) s += a[i][k];
      const double f = s > 0 ? col[k] / s : 0.0;
      for (std::size_t i = 0; i < M; ++i) a[i][k] *= f;
    }
    for (std::size_t i = 0; i < M; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < K; ++k) s += a[i][k];
      const double f = s > 0 ? size[i] / s : 0.0;
      for (std::size_t k = 0; k < K; ++k) a[i][k] *= f;
    }
  }
  std::vector<std::vector<std::size_t>> counts(M, std::vector<std::size_t>(K));
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> column(M);
    for (std::size_t i = 0; i < M; ++i) column[i] = a[i][k];
    const auto c = round_to_total(column, static_cast<std::size_t>(col[k]));
    for (std::size_t i = 0; i < M; ++i) counts[i][k] = c[i];
  }
  // Every client holds at least one row.
  for (std::size_t i = 0; i < M; ++i) {
    if (std::accumulate(counts[i].begin(), counts[i].end(), std::size_t{0}) > 0) continue;
    std::size_t donor = 0, cls = 0, best = 0;
    for (std::size_t j = 0; j < M; ++j) {
      for (std::size_t k = 0; k < K; ++k) {
        if (counts[j][k] > best) best = counts[j][k], donor = j, cls = k;
      }
    }
    --counts[donor][cls];
    ++counts[i][cls];
  }
  part.clients.resize(M);
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < M; ++i) {
      for (std::size_t j = 0; j < counts[i][k]; ++j) part.clients[i].push_back(by[k][cursor[k]++]);
    }
  }
  for (auto& c : part.clients) std::sort(c.begin(), c.end());
  std::sort(part.server.begin(), part.server.end());
  for (const auto& c : part.clients) part.histograms.push_back(histogram_of(data, c));
  fill_entropy(part, K);
  return part;
}

double shannon_entropy(std::span<const std::size_t> histogram, std::size_t k) {
  const double total = static_cast<double>(std::accumulate(histogram.begin(), histogram.end(), std::size_t{0}));
  if (total <= 0.0) throw InputError("entropy of an empty histogram");
  if (k <= 1) return 0.0;
  double h = 0.0;
  for (auto c : histogram) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(k));
}

std::size_t present_classes(std::span<const std::size_t> histogram) {
  return static_cast<std::size_t>(std::count_if(histogram.begin(), histogram.end(), [](auto c) { return c > 0; }));
}

void fill_entropy(ScenarioPartition& part, std::size_t normalizer_classes) {
  part.entropy.clear();
  for (const auto& h : part.histograms) {
    if (std::accumulate(h.begin(), h.end(), std::size_t{0}) == 0) {
      part.entropy.push_back(0.0);
      continue;
    }
    const std::size_t k = normalizer_classes == 0 ? present_classes(h) : normalizer_classes;
    part.entropy.push_back(shannon_entropy(h, k));
  }
}

TrainTestSplit stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in [0, 1)");
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Rng rng(derive_seed(seed, Stream::kPartition, {3}));
  auto by = rows_by_class(data, all, rng);
  TrainTestSplit s;
  for (auto& rows : by) {
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(rows.size())));
    s.test.insert(s.test.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

}  // namespace feds3a
