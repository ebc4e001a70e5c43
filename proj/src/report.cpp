#include "feds3a/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "feds3a/error.hpp"

namespace feds3a {

using nlohmann::json;

namespace {

const char* const kMetricKeys[] = {"accuracy", "precision", "recall", "f1", "fpr"};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string checksum_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json ledger_to_json(const RoundLedger& led) {
  json j;
  j["round"] = led.round;
  j["participants"] = led.participants;
  j["gaps"] = led.gaps;
  j["staleness"] = led.staleness;
  j["forced"] = led.forced;
  j["recipients"] = led.recipients;
  j["post_gaps"] = led.post_gaps;
  j["supervised_weight"] = led.supervised_weight;
  j["learning_rates"] = led.learning_rates;
  j["start_time"] = led.start_time;
  j["end_time"] = led.end_time;
  j["duration"] = led.duration();
  j["uplink_bytes"] = led.uplink_bytes;
  j["uplink_dense_bytes"] = led.uplink_dense_bytes;
  j["downlink_bytes"] = led.downlink_bytes;
  j["downlink_dense_bytes"] = led.downlink_dense_bytes;
  j["byte_ratio"] = led.byte_ratio();
  j["upload_sparsity"] = led.upload_sparsity;
  if (led.metrics) {
    j["metrics"] = {{"accuracy", led.metrics->accuracy}, {"precision", led.metrics->precision},
                    {"recall", led.metrics->recall},     {"f1", led.metrics->f1},
                    {"fpr", led.metrics->fpr},           {"zero_division", led.metrics->zero_division}};
  } else {
    j["metrics"] = nullptr;
  }
  j["model_checksum"] = checksum_hex(led.model_checksum);
  return j;
}

std::string trace_jsonl(const std::vector<RoundLedger>& rounds) {
  std::string out;
  for (const auto& r : rounds) {
    out += ledger_to_json(r).dump();
    out += '\n';
  }
  return out;
}

json summary_from_trace(const std::string& jsonl) {
  std::istringstream in(jsonl);
  std::string line;
  std::size_t n = 0;
  double ratio = 0.0, duration = 0.0, sparsity = 0.0;
  std::size_t up = 0, up_dense = 0, down = 0, down_dense = 0;
  json last;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("bad trace line: ") + e.what());
    }
    ++n;
    ratio += j.at("byte_ratio").get<double>();
    duration += j.at("duration").get<double>();
    sparsity += j.at("upload_sparsity").get<double>();
    up += j.at("uplink_bytes").get<std::size_t>();
    up_dense += j.at("uplink_dense_bytes").get<std::size_t>();
    down += j.at("downlink_bytes").get<std::size_t>();
    down_dense += j.at("downlink_dense_bytes").get<std::size_t>();
    last = std::move(j);
  }
  json s;
  s["rounds"] = n;
  if (n == 0) {
    s["aco"] = nullptr;
    s["art"] = nullptr;
    s["final_metrics"] = nullptr;
    s["final_model_checksum"] = nullptr;
    return s;
  }
  s["aco"] = ratio / static_cast<double>(n);
  s["art"] = duration / static_cast<double>(n);
  s["mean_upload_sparsity"] = sparsity / static_cast<double>(n);
  s["uplink_bytes"] = up;
  s["uplink_dense_bytes"] = up_dense;
  s["downlink_bytes"] = down;
  s["downlink_dense_bytes"] = down_dense;
  s["final_metrics"] = last.at("metrics");
  s["final_model_checksum"] = last.at("model_checksum");
  s["virtual_time"] = last.at("end_time");
  return s;
}

std::filesystem::path run_root() {
  const char* env = std::getenv("FEDS3A_RUN_ROOT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg, const ExperimentResult& result) {
  const std::string trace = trace_jsonl(result.rounds);
  json summary = summary_from_trace(trace);
  write_text(dir / "config.json", config_to_json(cfg).dump(2) + "\n");
  write_text(dir / "trace.jsonl", trace);
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  return summary;
}

json run_and_report(const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  if (cfg.repetitions <= 1) return write_run(dir, cfg, run_experiment(cfg));

  std::vector<json> reps;
  for (std::size_t k = 0; k < cfg.repetitions; ++k) {
    ExperimentConfig one = cfg;
    one.seed = cfg.seed + k;
    one.repetitions = 1;
    reps.push_back(write_run(dir / ("rep-" + std::to_string(k)), one, run_experiment(one)));
  }
  json mean;
  mean["repetitions"] = cfg.repetitions;
  double aco = 0.0, art = 0.0;
  for (const auto& r : reps) {
    aco += r.at("aco").get<double>();
    art += r.at("art").get<double>();
  }
  mean["aco"] = aco / static_cast<double>(reps.size());
  mean["art"] = art / static_cast<double>(reps.size());
  if (reps.front().at("final_metrics").is_object()) {
    json m;
    for (const char* key : kMetricKeys) {
      double s = 0.0;
      for (const auto& r : reps) s += r.at("final_metrics").at(key).get<double>();
      m[key] = s / static_cast<double>(reps.size());
    }
    mean["final_metrics"] = m;
  } else {
    mean["final_metrics"] = nullptr;
  }
  write_text(dir / "config.json", config_to_json(cfg).dump(2) + "\n");
  write_text(dir / "summary.json", mean.dump(2) + "\n");
  return mean;
}

std::string comparison_table(const std::string& key, const std::vector<TableRow>& rows) {
  std::string out = key + ",accuracy,precision,recall,f1,fpr,aco,art\n";
  for (const auto& row : rows) {
    out += row.label;
    const json& m = row.summary.at("final_metrics");
    for (const char* k : kMetricKeys) {
      out += ',';
      out += m.is_object() ? format_number(m.at(k).get<double>()) : "";
    }
    out += ',' + format_number(row.summary.at("aco").get<double>());
    out += ',' + format_number(row.summary.at("art").get<double>());
    out += '\n';
  }
  return out;
}

}  // namespace feds3a
