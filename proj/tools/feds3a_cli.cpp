// feds3a run | preset <name> | validate
//
// Exit codes: 0 success, 2 invalid configuration or usage, 1 runtime error.

#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "feds3a/config.hpp"
#include "feds3a/error.hpp"
#include "feds3a/presets.hpp"
#include "feds3a/report.hpp"

namespace {

std::string flag_name(std::string field) {
  for (char& c : field) {
    if (c == '_') c = '-';
  }
  return "--" + field;
}

struct ConfigFlags {
  std::string file;
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;

  void attach(CLI::App* cmd) {
    cmd->add_option("-c,--config", file, "JSON config file")->check(CLI::ExistingFile);
    for (const auto& f : feds3a::config_fields()) {
      cmd->add_option(flag_name(f.name), values[f.name], f.help)->group("Config fields");
    }
    cmd->add_option("--set", sets, "key=value override (repeatable)")->group("Config fields");
  }

  feds3a::ExperimentConfig parse(CLI::App* cmd) const {
    std::map<std::string, std::string> overrides;
    for (const auto& f : feds3a::config_fields()) {
      if (cmd->count(flag_name(f.name)) > 0) overrides[f.name] = values.at(f.name);
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw feds3a::ValidationError(s, "--set expects key=value");
      overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    const std::filesystem::path path(file);
    return feds3a::parse_and_validate(file.empty() ? nullptr : &path, overrides);
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised, semi-asynchronous federated learning simulator"};
  app.require_subcommand(1);

  ConfigFlags run_flags, preset_flags, validate_flags;
  std::string run_name = "run";
  std::string preset_name;
  bool full_scale = false;

  auto* run = app.add_subcommand("run", "Run one experiment (or its repetitions)");
  run_flags.attach(run);
  run->add_option("-n,--name", run_name, "Run directory name under the run root");

  auto* preset = app.add_subcommand("preset", "Run a named sweep and write its comparison table");
  preset->add_option("name", preset_name, "Preset name")->required();
  preset->add_flag("--full-scale", full_scale, "Use the basic CSV scenario instead of synthetic data");
  preset_flags.attach(preset);

  auto* validate = app.add_subcommand("validate", "Print the effective config");
  validate_flags.attach(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*validate) {
      const auto cfg = validate_flags.parse(validate);
      std::cout << feds3a::config_to_json(cfg).dump(2) << "\n";
    } else if (*run) {
      const auto cfg = run_flags.parse(run);
      const auto dir = feds3a::run_root() / run_name;
      const auto summary = feds3a::run_and_report(cfg, dir);
      std::cout << summary.dump(2) << "\n" << "wrote " << dir.string() << "\n";
    } else if (*preset) {
      const auto& p = feds3a::find_preset(preset_name);
      const auto cfg = preset_flags.parse(preset);
      const auto dir = feds3a::run_root() / p.name;
      feds3a::run_preset(p, cfg, full_scale, dir);
      std::cout << feds3a::read_text(dir / "table.csv") << "wrote " << dir.string() << "\n";
    }
  } catch (const feds3a::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
