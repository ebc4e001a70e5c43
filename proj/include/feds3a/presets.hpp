#pragma once

// Named experiment sweeps. Each preset is a list of cells, each cell a set
// of config overrides applied on top of a base config.

#include <filesystem>
#include <string>
#include <vector>

#include "feds3a/config.hpp"
#include "json.hpp"

namespace feds3a {

struct PresetCell {
  std::string label;
  nlohmann::json overrides;
};

struct Preset {
  std::string name;
  std::string key;  // first column of the comparison table
  std::vector<PresetCell> cells;
};

const std::vector<Preset>& presets();

// Throws ConfigError listing the valid names.
const Preset& find_preset(const std::string& name);

// Effective config of every cell. The supervised weight floor is recomputed
// per cell unless the cell sets it. full_scale switches to the basic CSV
// scenario.
std::vector<ExperimentConfig> preset_configs(const Preset& preset, const ExperimentConfig& base,
                                             bool full_scale);

// Runs every cell into dir/<label>/ and writes dir/table.csv.
void run_preset(const Preset& preset, const ExperimentConfig& base, bool full_scale,
                const std::filesystem::path& dir);

}  // namespace feds3a
