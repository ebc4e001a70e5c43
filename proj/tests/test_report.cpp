#include <gtest/gtest.h>

#include <filesystem>

#include "feds3a/error.hpp"
#include "feds3a/presets.hpp"
#include "feds3a/report.hpp"
#include "feds3a/transport.hpp"
#include "worked_trace.hpp"

using namespace feds3a;
using nlohmann::json;

namespace {

RoundLedger ledger(std::size_t round, std::size_t up, std::size_t up_dense, std::size_t down,
                   std::size_t down_dense, double start, double end) {
  RoundLedger l;
  l.round = round;
  l.uplink_bytes = up;
  l.uplink_dense_bytes = up_dense;
  l.downlink_bytes = down;
  l.downlink_dense_bytes = down_dense;
  l.start_time = start;
  l.end_time = end;
  return l;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("feds3a_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST(Summary, CompressionAndRoundTimeByHand) {
  std::vector<RoundLedger> rounds = {ledger(0, 100, 400, 100, 400, 0.0, 10.0),
                                     ledger(1, 300, 400, 400, 400, 10.0, 14.0)};
  rounds[1].metrics = RoundMetrics{0.9, 0.8, 0.7, 0.6, 0.1, false};
  rounds[1].model_checksum = 0xabcULL;
  const json s = summary_from_trace(trace_jsonl(rounds));
  EXPECT_EQ(s["rounds"], 2);
  // (200/800 + 700/800) / 2
  EXPECT_DOUBLE_EQ(s["aco"].get<double>(), (0.25 + 0.875) / 2);
  EXPECT_DOUBLE_EQ(s["art"].get<double>(), 7.0);
  EXPECT_DOUBLE_EQ(s["final_metrics"]["accuracy"].get<double>(), 0.9);
  EXPECT_EQ(s["final_model_checksum"], "0000000000000abc");
  EXPECT_EQ(s["uplink_bytes"], 400);
}

TEST(Summary, EmptyTraceHasNullValues) {
  const json s = summary_from_trace("");
  EXPECT_EQ(s["rounds"], 0);
  EXPECT_TRUE(s["aco"].is_null());
}

TEST(Summary, RegeneratedFromTraceIsIdentical) {
  const auto cfg = trace::worked_trace_config();
  const auto res = simulate(cfg, trace::worked_trace_inputs());
  const auto dir = scratch("regen");
  const json written = write_run(dir, cfg, res);
  const std::string on_disk = read_text(dir / "summary.json");
  EXPECT_EQ(summary_from_trace(read_text(dir / "trace.jsonl")).dump(2) + "\n", on_disk);
  EXPECT_EQ(written.dump(2) + "\n", on_disk);
  EXPECT_EQ(load_config(dir / "config.json"), cfg);
  std::filesystem::remove_all(dir);
}

TEST(Summary, DenseTransportHasUnitCompression) {
  auto cfg = trace::worked_trace_config();
  cfg.transport = TransportKind::kDense;
  const auto res = simulate(cfg, trace::worked_trace_inputs());
  const json s = summary_from_trace(trace_jsonl(res.rounds));
  EXPECT_DOUBLE_EQ(s["aco"].get<double>(), 1.0);
}

TEST(Summary, UnchangedModelsCompressToHeaders) {
  // With training skipped every delta is empty.
  const auto res = simulate(trace::worked_trace_config(), trace::worked_trace_inputs());
  for (const auto& led : res.rounds) {
    EXPECT_EQ(led.uplink_bytes, 2 * sparse_byte_cost(0));
    EXPECT_DOUBLE_EQ(led.upload_sparsity, 1.0);
  }
}

TEST(Table, HeaderOnlyWhenEmpty) {
  EXPECT_EQ(comparison_table("tau", {}), "tau,accuracy,precision,recall,f1,fpr,aco,art\n");
}

TEST(Table, FormatsRows) {
  json s = {{"aco", 0.5}, {"art", 12.25},
            {"final_metrics", {{"accuracy", 0.9}, {"precision", 0.8}, {"recall", 0.7}, {"f1", 0.75}, {"fpr", 0.01}}}};
  EXPECT_EQ(comparison_table("c", {{"0.4", s}}),
            "c,accuracy,precision,recall,f1,fpr,aco,art\n0.4,0.900000,0.800000,0.700000,0.750000,0.010000,0.500000,12.250000\n");
}

TEST(Io, UnwritablePathRaises) {
  const auto dir = scratch("ro");
  write_text(dir / "file", "x");
  // A regular file cannot act as a directory.
  EXPECT_THROW(write_text(dir / "file" / "nested.txt", "y"), IoError);
  EXPECT_THROW(read_text(dir / "missing"), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Presets, UnknownNameListsChoices) {
  try {
    find_preset("nope");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("tau-sweep"), std::string::npos);
  }
}

TEST(Presets, CellsResolveAndValidate) {
  ExperimentConfig base;
  for (const auto& p : presets()) {
    const auto cfgs = preset_configs(p, base, false);
    EXPECT_EQ(cfgs.size(), p.cells.size()) << p.name;
  }
  const auto c = preset_configs(find_preset("c-sweep"), base, false);
  EXPECT_DOUBLE_EQ(c.front().participation, 0.1);
  EXPECT_DOUBLE_EQ(c.front().sw_beta, 0.5);  // quorum 1
  EXPECT_DOUBLE_EQ(c.back().sw_beta, 1.0 / 11.0);
  const auto t = preset_configs(find_preset("tau-sweep"), base, false);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i].staleness_tolerance, i);
}
