#pragma once

#include <cstddef>
#include <vector>

#include "feds3a/data.hpp"
#include "feds3a/nn.hpp"

namespace feds3a {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes, 0) {}
  ConfusionMatrix(std::size_t classes, std::vector<std::size_t> row_major);

  std::size_t classes() const { return k_; }
  void add(std::size_t truth, std::size_t predicted, std::size_t n = 1);
  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
  std::size_t total() const;
  std::size_t support(std::size_t cls) const;
  std::size_t trace() const;

 private:
  std::size_t k_;
  std::vector<std::size_t> counts_;
};

struct ClassMetrics {
  std::size_t support = 0;
  double accuracy = 0.0;  // one-vs-rest (TP + TN) / N
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;
};

struct WeightedMetrics {
  double accuracy = 0.0;  // trace / total
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double fpr = 0.0;
  // Set when some per-class ratio had a zero denominator and was taken as 0.
  bool zero_division = false;
  std::vector<ClassMetrics> per_class;
};

// One-vs-rest metrics per class, averaged with class supports as weights.
// Classes without support are left out of the averages.
WeightedMetrics weighted_metrics(const ConfusionMatrix& conf);

ConfusionMatrix evaluate(const ParamVector& params, const ModelSpec& spec, const LabeledView& data,
                         std::size_t batch_size = 1024);

}  // namespace feds3a
