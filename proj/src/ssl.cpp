#include "feds3a/ssl.hpp"

#include <algorithm>
#include <numeric>

#include "feds3a/error.hpp"
#include "feds3a/rng.hpp"

namespace feds3a {

void PseudoLabelConfig::validate() const {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("pseudo-label threshold must lie in [0, 1]");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  if (epochs == 0) throw ConfigError("epochs must be positive");
}

namespace {

std::vector<std::size_t> iota(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::size_t argmax(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

}  // namespace

LocalTrainingResult client_local_training(const ParamVector& start, const ModelSpec& spec,
                                          const UnlabeledView& data, const PseudoLabelConfig& cfg,
                                          OptimizerState& opt, std::uint64_t seed) {
  cfg.validate();
  LocalTrainingResult out{start, {}, std::vector<std::size_t>(spec.classes(), 0)};
  if (data.size() == 0) {
    out.epochs.assign(cfg.epochs, EpochStats{});
    return out;
  }
  Rng rng(seed);
  auto order = iota(data.size());
  std::vector<std::size_t> argmax_hist(spec.classes(), 0);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    shuffle(std::span<std::size_t>(order), rng);
    std::fill(out.label_histogram.begin(), out.label_histogram.end(), 0);
    std::fill(argmax_hist.begin(), argmax_hist.end(), 0);
    double loss_sum = 0.0;
    std::size_t batches = 0, labeled = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), b + cfg.batch_size);
      const std::span<const std::size_t> idx(order.data() + b, end - b);
      const Matrix x = data.gather(idx);
      const Matrix probs = forward(out.params, spec, x);
      // Only confident rows contribute, so the gradient pass runs on those
      // rows alone.
      std::vector<std::size_t> keep;
      std::vector<std::size_t> cls;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto p = probs.row(r);
        const std::size_t k = argmax(p);
        ++argmax_hist[k];
        if (p[k] >= cfg.threshold) {
          keep.push_back(r);
          cls.push_back(k);
          ++out.label_histogram[k];
          ++labeled;
        }
      }
      Matrix xs(keep.size(), x.cols());
      Matrix targets(keep.size(), spec.classes());
      for (std::size_t j = 0; j < keep.size(); ++j) {
        std::copy_n(x.row(keep[j]).begin(), x.cols(), xs.row(j).begin());
        targets(j, cls[j]) = 1.0;
      }
      const std::vector<std::uint8_t> mask(keep.size(), 1);
      auto lg = loss_and_grad(out.params, spec, xs, targets, mask, spec.dropout > 0 ? &rng : nullptr);
      out.params = optimizer_step(opt, out.params, lg.grad);
      loss_sum += lg.loss;
      ++batches;
    }
    out.epochs.push_back({loss_sum / static_cast<double>(batches),
                          static_cast<double>(labeled) / static_cast<double>(data.size())});
  }
  if (std::accumulate(out.label_histogram.begin(), out.label_histogram.end(), std::size_t{0}) == 0) {
    out.label_histogram = argmax_hist;
  }
  return out;
}

SupervisedResult server_supervised_training(const ParamVector& start, const ModelSpec& spec,
                                            const LabeledView& data, std::size_t epochs,
                                            std::size_t batch_size, OptimizerState& opt,
                                            std::uint64_t seed) {
  if (data.size() == 0) throw ConfigError("server has no labeled data");
  if (batch_size == 0) throw ConfigError("batch size must be positive");
  SupervisedResult out{start, {}};
  Rng rng(seed);
  auto order = iota(data.size());
  for (std::size_t e = 0; e < epochs; ++e) {
    shuffle(std::span<std::size_t>(order), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < order.size(); b += batch_size) {
      const std::size_t end = std::min(order.size(), b + batch_size);
      const std::span<const std::size_t> idx(order.data() + b, end - b);
      const Matrix x = data.gather(idx);
      const Matrix t = data.gather_targets(idx);
      const std::vector<std::uint8_t> mask(x.rows(), 1);
      auto lg = loss_and_grad(out.params, spec, x, t, mask, spec.dropout > 0 ? &rng : nullptr);
      out.params = optimizer_step(opt, out.params, lg.grad);
      loss_sum += lg.loss;
      ++batches;
    }
    out.epochs.push_back({loss_sum / static_cast<double>(batches), 1.0});
  }
  return out;
}

double pseudo_label_coverage(const ParamVector& params, const ModelSpec& spec,
                             const UnlabeledView& data, double threshold) {
  if (data.size() == 0) return 0.0;
  const auto all = iota(data.size());
  const Matrix probs = forward(params, spec, data.gather(all));
  std::size_t hit = 0;
  for (std::size_t r = 0; r < probs.rows(); ++r) {
    const auto p = probs.row(r);
    if (*std::max_element(p.begin(), p.end()) >= threshold) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(data.size());
}

ParamVector centralized_ssl(const ParamVector& start, const ModelSpec& spec,
                            const LabeledView& labeled, const UnlabeledView& unlabeled,
                            const PseudoLabelConfig& cfg, std::size_t epochs,
                            OptimizerState& opt, std::uint64_t seed) {
  ParamVector params = start;
  PseudoLabelConfig one = cfg;
  one.epochs = 1;
  for (std::size_t e = 0; e < epochs; ++e) {
    params = server_supervised_training(params, spec, labeled, 1, cfg.batch_size, opt,
                                        derive_seed(seed, {e, 0})).params;
    params = client_local_training(params, spec, unlabeled, one, opt, derive_seed(seed, {e, 1})).params;
  }
  return params;
}

}  // namespace feds3a
