#pragma once

// Minimal feed-forward network (dense ReLU layers + softmax output) operating
// on a flat parameter vector. Parameters of layer l are stored as a row-major
// (out x in) weight matrix followed by the out-dimensional bias.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "feds3a/rng.hpp"

namespace feds3a {

struct LayerShape {
  std::size_t in = 0;
  std::size_t out = 0;

  std::size_t param_count() const { return in * out + out; }
  bool operator==(const LayerShape&) const = default;
};

class ParamVector {
 public:
  ParamVector() = default;
  ParamVector(std::vector<double> values, std::vector<LayerShape> shapes);

  static ParamVector zeros(std::vector<LayerShape> shapes);

  std::size_t size() const { return values_.size(); }
  const std::vector<LayerShape>& shapes() const { return shapes_; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  // Offset of layer l's weight block and bias block within values().
  std::size_t weight_offset(std::size_t layer) const;
  std::size_t bias_offset(std::size_t layer) const;

  bool same_layout(const ParamVector& other) const { return shapes_ == other.shapes_; }
  bool all_finite() const;

  bool operator==(const ParamVector&) const = default;

 private:
  std::vector<double> values_;
  std::vector<LayerShape> shapes_;
  std::vector<std::size_t> offsets_;
};

struct ModelSpec {
  // Input dimension, hidden widths..., class count.
  std::vector<std::size_t> widths;
  double dropout = 0.0;
  double l1 = 0.0;

  void validate() const;
  std::size_t input_dim() const { return widths.front(); }
  std::size_t classes() const { return widths.back(); }
  std::vector<LayerShape> shapes() const;
  std::size_t param_count() const;
};

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// He-normal weights, zero biases.
ParamVector init_params(const ModelSpec& spec, std::uint64_t seed);

// Eval-mode forward pass. Each output row is a probability vector.
Matrix forward(const ParamVector& params, const ModelSpec& spec, const Matrix& batch);

// Training-mode forward pass; inverted dropout on hidden activations drawn
// from `dropout_rng`. Identical to forward() when spec.dropout == 0.
Matrix forward_train(const ParamVector& params, const ModelSpec& spec, const Matrix& batch,
                     Rng& dropout_rng);

struct LossGrad {
  double loss = 0.0;
  ParamVector grad;
};

// Mean cross-entropy over rows with mask[i] != 0 plus l1 * ||params||_1.
// Rows that are masked out may carry any target. With no unmasked rows the
// data term and its gradient are zero. Dropout is applied when a RNG is given.
LossGrad loss_and_grad(const ParamVector& params, const ModelSpec& spec, const Matrix& batch,
                       const Matrix& targets, std::span<const std::uint8_t> mask,
                       Rng* dropout_rng = nullptr);

enum class OptimizerKind { kSgd, kAdam };

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  static OptimizerState make(OptimizerKind kind, double learning_rate, std::size_t param_count);
};

// One update. SGD: params - lr * grad. Adam: bias-corrected moments.
ParamVector optimizer_step(OptimizerState& state, const ParamVector& params,
                           const ParamVector& grad);

}  // namespace feds3a
