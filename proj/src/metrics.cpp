#include "feds3a/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "feds3a/error.hpp"

namespace feds3a {

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::size_t> row_major)
    : k_(classes), counts_(std::move(row_major)) {
  if (counts_.size() != k_ * k_) throw InputError("confusion matrix needs classes^2 entries");
}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::size_t n) {
  if (truth >= k_ || predicted >= k_) throw InputError("class id out of range");
  counts_[truth * k_ + predicted] += n;
}

std::size_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0});
}

std::size_t ConfusionMatrix::support(std::size_t cls) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < k_; ++p) s += at(cls, p);
  return s;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < k_; ++c) t += at(c, c);
  return t;
}

WeightedMetrics weighted_metrics(const ConfusionMatrix& conf) {
  WeightedMetrics w;
  const std::size_t n = conf.total();
  if (n == 0) return w;
  const double total = static_cast<double>(n);
  auto ratio = [&w](double num, double den) {
    if (den == 0.0) {
      w.zero_division = true;
      return 0.0;
    }
    return num / den;
  };
  for (std::size_t c = 0; c < conf.classes(); ++c) {
    ClassMetrics m;
    double tp = static_cast<double>(conf.at(c, c));
    double fn = 0.0, fp = 0.0;
    for (std::size_t o = 0; o < conf.classes(); ++o) {
      if (o == c) continue;
      fn += static_cast<double>(conf.at(c, o));
      fp += static_cast<double>(conf.at(o, c));
    }
    const double tn = total - tp - fn - fp;
    m.support = conf.support(c);
    if (m.support > 0) {
      m.accuracy = (tp + tn) / total;
      m.precision = ratio(tp, tp + fp);
      m.recall = ratio(tp, tp + fn);
      m.f1 = ratio(2 * tp, 2 * tp + fn + fp);
      m.fpr = ratio(fp, fp + tn);
      const double weight = static_cast<double>(m.support) / total;
      w.precision += weight * m.precision;
      w.recall += weight * m.recall;
      w.f1 += weight * m.f1;
      w.fpr += weight * m.fpr;
    }
    w.per_class.push_back(m);
  }
  w.accuracy = static_cast<double>(conf.trace()) / total;
  return w;
}

ConfusionMatrix evaluate(const ParamVector& params, const ModelSpec& spec, const LabeledView& data,
                         std::size_t batch_size) {
  ConfusionMatrix conf(spec.classes());
  std::vector<std::size_t> idx;
  for (std::size_t b = 0; b < data.size(); b += batch_size) {
    idx.clear();
    for (std::size_t i = b; i < std::min(data.size(), b + batch_size); ++i) idx.push_back(i);
    const Matrix probs = forward(params, spec, data.gather(idx));
    for (std::size_t r = 0; r < probs.rows(); ++r) {
      const auto p = probs.row(r);
      const auto pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
      conf.add(static_cast<std::size_t>(data.label(idx[r])), pred);
    }
  }
  return conf;
}

}  // namespace feds3a
