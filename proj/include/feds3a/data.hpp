#pragma once

// Dataset ingestion, synthetic blobs, scenario partitioning and the
// normalized Shannon entropy used to describe client class imbalance.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "feds3a/nn.hpp"

namespace feds3a {

struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.cols(); }
  std::size_t classes() const { return class_names.size(); }
};

// Client-facing view: features of a subset of rows. There is deliberately no
// way to reach labels from here.
class UnlabeledView {
 public:
  UnlabeledView() = default;
  UnlabeledView(const Matrix& features, std::vector<std::size_t> rows)
      : features_(&features), rows_(std::move(rows)) {}

  std::size_t size() const { return rows_.size(); }
  std::size_t feature_dim() const { return features_ ? features_->cols() : 0; }
  std::span<const double> row(std::size_t i) const { return features_->row(rows_[i]); }
  // Gathers local positions `which` into a dense batch.
  Matrix gather(std::span<const std::size_t> which) const;

 private:
  const Matrix* features_ = nullptr;
  std::vector<std::size_t> rows_;
};

// Server and evaluation view with ground-truth labels.
class LabeledView {
 public:
  LabeledView() = default;
  LabeledView(const Dataset& data, std::vector<std::size_t> rows)
      : data_(&data), rows_(std::move(rows)) {}
  static LabeledView all(const Dataset& data);

  std::size_t size() const { return rows_.size(); }
  std::size_t feature_dim() const { return data_ ? data_->feature_dim() : 0; }
  std::size_t classes() const { return data_ ? data_->classes() : 0; }
  std::span<const double> row(std::size_t i) const { return data_->features.row(rows_[i]); }
  int label(std::size_t i) const { return data_->labels[rows_[i]]; }
  Matrix gather(std::span<const std::size_t> which) const;
  // One-hot targets for the gathered rows.
  Matrix gather_targets(std::span<const std::size_t> which) const;
  UnlabeledView without_labels() const { return UnlabeledView(data_->features, rows_); }

 private:
  const Dataset* data_ = nullptr;
  std::vector<std::size_t> rows_;
};

// Per-column standardization fitted on a subset of rows (the training split).
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Standardizer fit(const Matrix& features, std::span<const std::size_t> rows);
  void apply(Matrix& features) const;
};

// The nine CIC-IDS 2017 classes kept for experiments.
std::vector<std::string> default_ids_classes();

struct CsvSchema {
  std::string label_column = "Label";
  // Empty: every non-label column is a feature.
  std::vector<std::string> feature_columns;
  std::vector<std::string> classes = default_ids_classes();
};

struct CsvLoadReport {
  std::size_t rows_read = 0;
  std::size_t dropped_malformed = 0;  // wrong field count or unparsable number
  std::size_t dropped_nonfinite = 0;  // missing, NaN or infinite value
  std::size_t dropped_class = 0;      // label outside the configured class set
  std::size_t dropped() const { return dropped_malformed + dropped_nonfinite + dropped_class; }
};

struct CsvDataset {
  Dataset data;
  CsvLoadReport report;
};

CsvDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

struct SyntheticSpec {
  std::size_t classes = 3;
  std::size_t per_class = 1000;
  std::size_t feature_dim = 8;
  double separation = 10.0;
  std::uint64_t seed = 0;
};

// Unit-covariance Gaussian blobs; class k is centred at
// (separation / sqrt 2) * e_k so every pair of centres is `separation` apart.
Dataset make_synthetic(const SyntheticSpec& spec);

// Per-client class quotas, rows = clients, columns = dataset classes.
struct QuotaTable {
  std::vector<std::string> class_names;
  std::vector<std::vector<std::size_t>> counts;

  std::size_t clients() const { return counts.size(); }
};

// CSV with header "client,class,count". Unlisted (client, class) pairs are 0.
QuotaTable load_quota_csv(const std::filesystem::path& path,
                          const std::vector<std::string>& class_names);

// Location of the shipped quota tables for the 10-client CIC-IDS scenarios.
std::filesystem::path shipped_quota_path(const std::string& scenario);

struct ScenarioPartition {
  std::vector<std::vector<std::size_t>> clients;
  std::vector<std::size_t> server;
  std::vector<std::vector<std::size_t>> histograms;  // per-client class counts
  std::vector<double> entropy;
};

// Clients take exactly the quoted counts per class (first rows of each class
// in a seeded shuffle of `pool`). The server then takes a class-stratified
// sample of the remainder sized so that it is `server_fraction` of all
// training data handed out.
ScenarioPartition partition_by_quota(const Dataset& data, std::span<const std::size_t> pool,
                                     const QuotaTable& quotas, double server_fraction,
                                     std::uint64_t seed);

struct DirichletPartitionConfig {
  std::size_t clients = 10;
  double alpha = 0.3;
  // Ratio between the largest and smallest client share.
  double size_ratio = 4.64;
  double server_fraction = 0.05;
  std::uint64_t seed = 0;
};

// Server split first (class-stratified), then the remainder is spread across
// clients: geometric client sizes, Dirichlet(alpha) class proportions per
// client, balanced against the available class counts.
ScenarioPartition partition_dirichlet(const Dataset& data, std::span<const std::size_t> pool,
                                      const DirichletPartitionConfig& cfg);

// Normalized Shannon entropy -sum p log p / log K over the nonzero bins.
// Returns 0 for K <= 1.
double shannon_entropy(std::span<const std::size_t> histogram, std::size_t k);

// Number of nonzero bins.
std::size_t present_classes(std::span<const std::size_t> histogram);

// Normalizer of the shipped quota tables: their entropies are stated against
// ten classes although nine appear in the data.
inline constexpr std::size_t kQuotaEntropyClasses = 10;

// Entropy normalizer used when populating ScenarioPartition::entropy:
// 0 selects the number of classes the client actually holds.
void fill_entropy(ScenarioPartition& part, std::size_t normalizer_classes);

// Deterministic train/holdout split, stratified by class.
struct TrainTestSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
TrainTestSplit stratified_split(const Dataset& data, double test_fraction, std::uint64_t seed);

}  // namespace feds3a
