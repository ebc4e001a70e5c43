#pragma once

// Run artifacts: one JSON object per round in trace.jsonl, a summary derived
// only from that trace, the effective config, and comparison tables.

#include <filesystem>
#include <string>
#include <vector>

#include "feds3a/config.hpp"
#include "feds3a/sim.hpp"
#include "json.hpp"

namespace feds3a {

std::string checksum_hex(std::uint64_t v);

nlohmann::json ledger_to_json(const RoundLedger& led);

// One compact JSON object per line, newline-terminated.
std::string trace_jsonl(const std::vector<RoundLedger>& rounds);

// final metrics, ACO (mean per-round byte ratio), ART (mean round duration),
// final model checksum. Depends on nothing but the trace text.
nlohmann::json summary_from_trace(const std::string& jsonl);

// FEDS3A_RUN_ROOT, or ./runs.
std::filesystem::path run_root();

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// Writes config.json, trace.jsonl and summary.json under dir; returns the
// summary.
nlohmann::json write_run(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                         const ExperimentResult& result);

// Runs cfg.repetitions experiments with seeds seed, seed + 1, ... into
// dir/rep-<k> and writes dir/summary.json with the per-field means. With a
// single repetition this is write_run(dir, ...).
nlohmann::json run_and_report(const ExperimentConfig& cfg, const std::filesystem::path& dir);

struct TableRow {
  std::string label;
  nlohmann::json summary;
};

// CSV with header `<key>,accuracy,precision,recall,f1,fpr,aco,art`.
std::string comparison_table(const std::string& key, const std::vector<TableRow>& rows);

}  // namespace feds3a
