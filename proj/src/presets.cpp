#include "feds3a/presets.hpp"

#include <numbers>

#include "feds3a/error.hpp"
#include "feds3a/report.hpp"

namespace feds3a {

using nlohmann::json;

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = [] {
    const double half_e = std::numbers::e / 2.0;
    std::vector<Preset> v;
    v.push_back({"staleness-sweep",
                 "staleness",
                 {{"constant", {{"staleness_function", "constant"}, {"staleness_a", 0.0}, {"staleness_b", 0.0}}},
                  {"polynomial", {{"staleness_function", "polynomial"}, {"staleness_a", 0.5}, {"staleness_b", 0.0}}},
                  {"hinge", {{"staleness_function", "hinge"}, {"staleness_a", 1.0}, {"staleness_b", 0.0}}},
                  {"exponential",
                   {{"staleness_function", "exponential"}, {"staleness_a", half_e}, {"staleness_b", 0.0}}}}});
    v.push_back({"round-weight-sweep",
                 "round_weight",
                 {{"non-adaptive", {{"adaptive_lr", false}}},
                  {"constant", {{"adaptive_lr", true}, {"round_weight_function", "constant"}, {"round_weight_a", 0.0}}},
                  {"logarithmic",
                   {{"adaptive_lr", true}, {"round_weight_function", "logarithmic"}, {"round_weight_a", 0.0}}},
                  {"polynomial",
                   {{"adaptive_lr", true}, {"round_weight_function", "polynomial"}, {"round_weight_a", 0.5}}},
                  {"exponential-smoothing",
                   {{"adaptive_lr", true}, {"round_weight_function", "exponential-smoothing"}, {"round_weight_a", 0.1}}},
                  {"exponential",
                   {{"adaptive_lr", true}, {"round_weight_function", "exponential"}, {"round_weight_a", half_e}}}}});
    Preset tau{"tau-sweep", "tau", {}};
    for (int t = 0; t <= 4; ++t) tau.cells.push_back({std::to_string(t), {{"staleness_tolerance", t}}});
    v.push_back(tau);
    v.push_back({"c-sweep",
                 "participation",
                 {{"0.1", {{"participation", 0.1}}},
                  {"0.4", {{"participation", 0.4}}},
                  {"0.5", {{"participation", 0.5}}},
                  {"0.6", {{"participation", 0.6}}},
                  {"1", {{"participation", 1.0}}}}});
    Preset server{"server-size-sweep", "server_fraction", {}};
    for (int pct : {1, 2, 4, 5, 7}) server.cells.push_back({std::to_string(pct) + "%", {{"server_fraction", pct / 100.0}}});
    v.push_back(server);
    v.push_back({"group-ablation",
                 "grouping",
                 {{"ungrouped", {{"groups", 1}}},
                  {"grouped", {{"groups", 3}, {"histogram_source", "pseudo-label"}}},
                  {"grouped-oracle", {{"groups", 3}, {"histogram_source", "oracle"}}}}});
    v.push_back({"supervised-weight-ablation",
                 "supervised_weight",
                 {{"adaptive", json::object()},
                  {"fixed-1/2", {{"sw_alpha", 0.5}, {"sw_beta", 0.5}}},
                  {"fixed-1/7", {{"sw_alpha", 1.0 / 7.0}, {"sw_beta", 1.0 / 7.0}}}}});
    v.push_back({"baselines",
                 "method",
                 {{"feds3a", {{"baseline", "feds3a"}}},
                  {"fedavg-partial", {{"baseline", "fedavg-partial"}}},
                  {"fedavg-all", {{"baseline", "fedavg-all"}}},
                  {"fedasync", {{"baseline", "fedasync"}}}}});
    return v;
  }();
  return all;
}

const Preset& find_preset(const std::string& name) {
  std::string names;
  for (const auto& p : presets()) {
    if (p.name == name) return p;
    names += (names.empty() ? "" : ", ") + p.name;
  }
  throw ConfigError("unknown preset '" + name + "'; valid presets: " + names);
}

std::vector<ExperimentConfig> preset_configs(const Preset& preset, const ExperimentConfig& base,
                                             bool full_scale) {
  json doc = config_to_json(base);
  doc.erase("sw_beta");
  if (full_scale) doc["scenario"] = "basic";
  std::vector<ExperimentConfig> out;
  for (const auto& cell : preset.cells) {
    json d = doc;
    for (const auto& [k, v] : cell.overrides.items()) d[k] = v;
    out.push_back(config_from_json(d));
  }
  return out;
}

void run_preset(const Preset& preset, const ExperimentConfig& base, bool full_scale,
                const std::filesystem::path& dir) {
  const auto configs = preset_configs(preset, base, full_scale);
  std::vector<TableRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::string slug = preset.cells[i].label;
    for (char& ch : slug) {
      if (ch == '/' || ch == '%') ch = '_';
    }
    rows.push_back({preset.cells[i].label, run_and_report(configs[i], dir / slug)});
  }
  write_text(dir / "table.csv", comparison_table(preset.key, rows));
}

}  // namespace feds3a
