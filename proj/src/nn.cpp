#include "feds3a/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "feds3a/error.hpp"

namespace feds3a {

ParamVector::ParamVector(std::vector<double> values, std::vector<LayerShape> shapes)
    : values_(std::move(values)), shapes_(std::move(shapes)) {
  std::size_t offset = 0;
  offsets_.reserve(shapes_.size());
  for (const auto& s : shapes_) {
    offsets_.push_back(offset);
    offset += s.param_count();
  }
  if (offset != values_.size()) {
    throw ConfigError("parameter vector has " + std::to_string(values_.size()) +
                      " values but its layer shapes need " + std::to_string(offset));
  }
}

ParamVector ParamVector::zeros(std::vector<LayerShape> shapes) {
  std::size_t n = 0;
  for (const auto& s : shapes) n += s.param_count();
  return ParamVector(std::vector<double>(n, 0.0), std::move(shapes));
}

std::size_t ParamVector::weight_offset(std::size_t layer) const { return offsets_.at(layer); }

std::size_t ParamVector::bias_offset(std::size_t layer) const {
  return offsets_.at(layer) + shapes_.at(layer).in * shapes_.at(layer).out;
}

bool ParamVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ModelSpec::validate() const {
  if (widths.size() < 2) throw ConfigError("model needs at least an input and an output width");
  for (auto w : widths) {
    if (w == 0) throw ConfigError("model layer widths must be positive");
  }
  if (widths.back() < 2) throw ConfigError("model needs at least two classes");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(l1 >= 0.0) || !std::isfinite(l1)) throw ConfigError("l1 coefficient must be >= 0");
}

std::vector<LayerShape> ModelSpec::shapes() const {
  std::vector<LayerShape> out;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) out.push_back({widths[i], widths[i + 1]});
  return out;
}

std::size_t ModelSpec::param_count() const {
  std::size_t n = 0;
  for (const auto& s : shapes()) n += s.param_count();
  return n;
}

ParamVector init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  auto p = ParamVector::zeros(spec.shapes());
  Rng rng(seed);
  for (std::size_t l = 0; l < p.shapes().size(); ++l) {
    const auto& s = p.shapes()[l];
    const double scale = std::sqrt(2.0 / static_cast<double>(s.in));
    const std::size_t w0 = p.weight_offset(l);
    for (std::size_t k = 0; k < s.in * s.out; ++k) p[w0 + k] = scale * rng.normal();
  }
  return p;
}

namespace {

void check_compatible(const ParamVector& params, const ModelSpec& spec, const Matrix& batch) {
  if (batch.cols() != spec.input_dim()) {
    throw ConfigError("batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                      std::to_string(spec.input_dim()));
  }
  if (params.shapes() != spec.shapes()) {
    throw ConfigError("parameter layout does not match the model spec");
  }
}

// Per-layer intermediate values of one forward pass.
struct Trace {
  std::vector<Matrix> pre;         // z_l = W_l a_l + b_l, one per layer
  std::vector<Matrix> act;         // act[0] = input, act[l+1] = activation of layer l
  std::vector<Matrix> drop_scale;  // per hidden layer; empty when no dropout
  std::vector<Matrix> log_probs;   // single entry: log-softmax of the last layer
};

void dense(const ParamVector& p, std::size_t layer, const Matrix& in, Matrix& out) {
  const auto& s = p.shapes()[layer];
  const double* w = p.values().data() + p.weight_offset(layer);
  const double* b = p.values().data() + p.bias_offset(layer);
  out = Matrix(in.rows(), s.out);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    const auto x = in.row(r);
    auto z = out.row(r);
    std::size_t o = 0;
    // Four output units at a time: independent sums, same order per unit.
    for (; o + 4 <= s.out; o += 4) {
      const double* w0 = w + o * s.in;
      const double* w1 = w0 + s.in;
      const double* w2 = w1 + s.in;
      const double* w3 = w2 + s.in;
      double a0 = b[o], a1 = b[o + 1], a2 = b[o + 2], a3 = b[o + 3];
      for (std::size_t i = 0; i < s.in; ++i) {
        const double xi = x[i];
        a0 += w0[i] * xi;
        a1 += w1[i] * xi;
        a2 += w2[i] * xi;
        a3 += w3[i] * xi;
      }
      z[o] = a0;
      z[o + 1] = a1;
      z[o + 2] = a2;
      z[o + 3] = a3;
    }
    for (; o < s.out; ++o) {
      const double* wr = w + o * s.in;
      double acc = b[o];
      for (std::size_t i = 0; i < s.in; ++i) acc += wr[i] * x[i];
      z[o] = acc;
    }
  }
}

void check_finite(const Matrix& m, std::size_t layer) {
  for (double v : m.data()) {
    if (!std::isfinite(v)) {
      throw NumericError("non-finite activation in layer " + std::to_string(layer));
    }
  }
}

Trace run_forward(const ParamVector& params, const ModelSpec& spec, const Matrix& batch,
                  Rng* dropout_rng) {
  check_compatible(params, spec, batch);
  const std::size_t layers = params.shapes().size();
  Trace t;
  t.pre.resize(layers);
  t.act.resize(layers + 1);
  t.act[0] = batch;
  const bool use_dropout = dropout_rng != nullptr && spec.dropout > 0.0;
  const double keep_scale = 1.0 / (1.0 - spec.dropout);
  for (std::size_t l = 0; l < layers; ++l) {
    dense(params, l, t.act[l], t.pre[l]);
    check_finite(t.pre[l], l);
    if (l + 1 < layers) {
      Matrix a = t.pre[l];
      for (auto& v : a.data()) v = v > 0.0 ? v : 0.0;
      if (use_dropout) {
        Matrix scale(a.rows(), a.cols());
        for (auto& s : scale.data()) s = dropout_rng->uniform01() < spec.dropout ? 0.0 : keep_scale;
        for (std::size_t k = 0; k < a.data().size(); ++k) a.data()[k] *= scale.data()[k];
        t.drop_scale.push_back(std::move(scale));
      }
      t.act[l + 1] = std::move(a);
    } else {
      const Matrix& z = t.pre[l];
      Matrix logp(z.rows(), z.cols());
      Matrix probs(z.rows(), z.cols());
      for (std::size_t r = 0; r < z.rows(); ++r) {
        const auto zr = z.row(r);
        const double mx = *std::max_element(zr.begin(), zr.end());
        double sum = 0.0;
        for (double v : zr) sum += std::exp(v - mx);
        const double lse = mx + std::log(sum);
        for (std::size_t c = 0; c < z.cols(); ++c) {
          logp(r, c) = zr[c] - lse;
          probs(r, c) = std::exp(logp(r, c));
        }
      }
      t.log_probs.push_back(std::move(logp));
      t.act[l + 1] = std::move(probs);
    }
  }
  return t;
}

}  // namespace

Matrix forward(const ParamVector& params, const ModelSpec& spec, const Matrix& batch) {
  return std::move(run_forward(params, spec, batch, nullptr).act.back());
}

Matrix forward_train(const ParamVector& params, const ModelSpec& spec, const Matrix& batch,
                     Rng& dropout_rng) {
  return std::move(run_forward(params, spec, batch, &dropout_rng).act.back());
}

LossGrad loss_and_grad(const ParamVector& params, const ModelSpec& spec, const Matrix& batch,
                       const Matrix& targets, std::span<const std::uint8_t> mask,
                       Rng* dropout_rng) {
  if (mask.size() != batch.rows()) throw ConfigError("mask length must equal batch rows");
  if (targets.rows() != batch.rows() || targets.cols() != spec.classes()) {
    throw ConfigError("target matrix must be rows x classes");
  }
  std::size_t active = 0;
  for (std::size_t r = 0; r < mask.size(); ++r) {
    if (!mask[r]) continue;
    ++active;
    double sum = 0.0;
    for (double v : targets.row(r)) {
      if (v != 0.0 && v != 1.0) throw InputError("target row " + std::to_string(r) + " is not one-hot");
      sum += v;
    }
    if (sum != 1.0) throw InputError("target row " + std::to_string(r) + " is not one-hot");
  }

  LossGrad out{0.0, ParamVector::zeros(spec.shapes())};
  check_compatible(params, spec, batch);

  if (active > 0) {
    Trace t = run_forward(params, spec, batch, dropout_rng);
    const std::size_t layers = params.shapes().size();
    const double inv_n = 1.0 / static_cast<double>(active);
    const Matrix& logp = t.log_probs.front();
    const Matrix& probs = t.act.back();

    Matrix delta(batch.rows(), spec.classes());
    double data_loss = 0.0;
    for (std::size_t r = 0; r < batch.rows(); ++r) {
      if (!mask[r]) continue;
      for (std::size_t c = 0; c < spec.classes(); ++c) {
        if (targets(r, c) != 0.0) data_loss -= logp(r, c);
        delta(r, c) = (probs(r, c) - targets(r, c)) * inv_n;
      }
    }
    out.loss = data_loss * inv_n;

    for (std::size_t l = layers; l-- > 0;) {
      const auto& s = params.shapes()[l];
      const Matrix& a = t.act[l];
      double* gw = out.grad.values().data() + out.grad.weight_offset(l);
      double* gb = out.grad.values().data() + out.grad.bias_offset(l);
      for (std::size_t r = 0; r < batch.rows(); ++r) {
        if (!mask[r]) continue;
        const auto d = delta.row(r);
        const auto x = a.row(r);
        for (std::size_t o = 0; o < s.out; ++o) {
          const double dv = d[o];
          if (dv == 0.0) continue;
          gb[o] += dv;
          double* gwr = gw + o * s.in;
          for (std::size_t i = 0; i < s.in; ++i) gwr[i] += dv * x[i];
        }
      }
      if (l == 0) break;
      const double* w = params.values().data() + params.weight_offset(l);
      Matrix prev(batch.rows(), s.in);
      for (std::size_t r = 0; r < batch.rows(); ++r) {
        if (!mask[r]) continue;
        const auto d = delta.row(r);
        auto pr = prev.row(r);
        for (std::size_t o = 0; o < s.out; ++o) {
          const double dv = d[o];
          if (dv == 0.0) continue;
          const double* wr = w + o * s.in;
          for (std::size_t i = 0; i < s.in; ++i) pr[i] += dv * wr[i];
        }
        const auto z = t.pre[l - 1].row(r);
        for (std::size_t i = 0; i < s.in; ++i) {
          double g = z[i] > 0.0 ? pr[i] : 0.0;
          if (!t.drop_scale.empty()) g *= t.drop_scale[l - 1](r, i);
          pr[i] = g;
        }
      }
      delta = std::move(prev);
    }
  }

  if (spec.l1 > 0.0) {
    double norm = 0.0;
    auto g = out.grad.values();
    const auto p = params.values();
    for (std::size_t k = 0; k < p.size(); ++k) {
      norm += std::abs(p[k]);
      if (p[k] > 0.0) g[k] += spec.l1;
      else if (p[k] < 0.0) g[k] -= spec.l1;
    }
    out.loss += spec.l1 * norm;
  }
  return out;
}

OptimizerState OptimizerState::make(OptimizerKind kind, double learning_rate,
                                    std::size_t param_count) {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("learning rate must be positive");
  }
  OptimizerState s;
  s.kind = kind;
  s.learning_rate = learning_rate;
  if (kind == OptimizerKind::kAdam) {
    s.m.assign(param_count, 0.0);
    s.v.assign(param_count, 0.0);
  }
  return s;
}

ParamVector optimizer_step(OptimizerState& state, const ParamVector& params,
                           const ParamVector& grad) {
  if (params.size() != grad.size()) throw ConfigError("gradient length differs from parameters");
  if (!grad.all_finite()) throw NumericError("non-finite gradient");
  ParamVector next = params;
  auto w = next.values();
  const auto g = grad.values();
  ++state.step;
  if (state.kind == OptimizerKind::kSgd) {
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= state.learning_rate * g[k];
    return next;
  }
  if (state.m.size() != w.size() || state.v.size() != w.size()) {
    throw ConfigError("Adam moment vectors do not match the parameter count");
  }
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t k = 0; k < w.size(); ++k) {
    state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g[k];
    state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g[k] * g[k];
    const double mhat = state.m[k] / c1;
    const double vhat = state.v[k] / c2;
    w[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
  }
  return next;
}

}  // namespace feds3a
