#pragma once

// Client-side pseudo-label training and server-side supervised training.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "feds3a/data.hpp"
#include "feds3a/nn.hpp"

namespace feds3a {

struct PseudoLabelConfig {
  double threshold = 0.95;
  std::size_t batch_size = 100;
  std::size_t epochs = 1;

  void validate() const;
};

struct EpochStats {
  double loss = 0.0;      // mean over batches
  double coverage = 0.0;  // fraction of rows that received a pseudo-label
};

struct LocalTrainingResult {
  ParamVector params;
  std::vector<EpochStats> epochs;
  // Class counts of the pseudo-labels assigned during the last epoch; when no
  // row passed the threshold, counts of the raw argmax predictions instead.
  std::vector<std::size_t> label_histogram;
};

// Pseudo-label training on unlabeled rows. Per mini-batch, rows whose top
// probability is >= threshold get the argmax class as a constant target;
// other rows are masked out. One optimizer step per batch. The seed drives
// shuffling and dropout.
LocalTrainingResult client_local_training(const ParamVector& start, const ModelSpec& spec,
                                          const UnlabeledView& data, const PseudoLabelConfig& cfg,
                                          OptimizerState& opt, std::uint64_t seed);

struct SupervisedResult {
  ParamVector params;
  std::vector<EpochStats> epochs;
};

SupervisedResult server_supervised_training(const ParamVector& start, const ModelSpec& spec,
                                            const LabeledView& data, std::size_t epochs,
                                            std::size_t batch_size, OptimizerState& opt,
                                            std::uint64_t seed);

// Fraction of rows whose top predicted probability reaches the threshold.
double pseudo_label_coverage(const ParamVector& params, const ModelSpec& spec,
                             const UnlabeledView& data, double threshold);

// Centralized semi-supervised reference: each epoch is one supervised pass
// over the labeled rows followed by one pseudo-label pass over the pooled
// unlabeled rows.
ParamVector centralized_ssl(const ParamVector& start, const ModelSpec& spec,
                            const LabeledView& labeled, const UnlabeledView& unlabeled,
                            const PseudoLabelConfig& cfg, std::size_t epochs,
                            OptimizerState& opt, std::uint64_t seed);

}  // namespace feds3a
