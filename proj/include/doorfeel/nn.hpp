// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

// Small reverse-mode engine for the fixed conv/LSTM/dense topology. Every
// layer caches what it needs during forward() and consumes it in backward().
// Batches of sequences are stored time-major: column t * batch + b holds
// time step t of sample b, so one time step of the whole batch is a
// contiguous block of columns.
//
// Everything is templated on the scalar type and instantiated for float and
// double. Gradient checks use double; training may use either.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace doorfeel::nn {

using Index = Eigen::Index;
using Rng = std::mt19937_64;

template <typename T>
using MatrixT = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using VectorT = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using Matrix = MatrixT<double>;
using Vector = VectorT<double>;

template <typename T>
struct Parameter {
  std::string name;
  MatrixT<T> value;
  MatrixT<T> grad;

  Parameter() = default;
  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(MatrixT<T>::Zero(rows, cols)), grad(MatrixT<T>::Zero(rows, cols)) {}
};

template <typename T>
using ParameterList = std::vector<Parameter<T>*>;

template <typename T>
void zero_grads(const ParameterList<T>& params) {
  for (auto* p : params) p->grad.setZero(p->value.rows(), p->value.cols());
}

template <typename T>
std::size_t parameter_count(const ParameterList<T>& params) {
  std::size_t n = 0;
  for (const auto* p : params) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename T>
struct Sequence {
  MatrixT<T> data;  // channels x (steps * batch)
  Index steps = 0;
  Index batch = 1;

  Index channels() const { return data.rows(); }
  /// Wraps one sample given as channels x length.
  static Sequence single(MatrixT<T> x) {
    Sequence s;
    s.steps = x.cols();
    s.data = std::move(x);
    return s;
  }
  /// Time-major sequence from a (length x batch) matrix of scalar series.
  static Sequence from_columns(const MatrixT<T>& series);
};

/// Flattens channel-major then position: feature c * steps + t.
template <typename T>
MatrixT<T> flatten(const Sequence<T>& x);
template <typename T>
Sequence<T> unflatten(const MatrixT<T>& flat, Index channels, Index steps);

// ---------------------------------------------------------------------------

/// Kernel-3, stride-1 cross-correlation with one zero of padding on each side.
/// weight is filters x (3 * in_channels); column block k multiplies x[t + k - 1].
template <typename T>
class Conv1D {
 public:
  static constexpr Index kKernel = 3;

  Conv1D() = default;
  Conv1D(Index in_channels, Index filters, const std::string& name);

  /// Takes the input by value; it is kept for backward().
  Sequence<T> forward(Sequence<T> x);
  Sequence<T> backward(const Sequence<T>& dy);
  ParameterList<T> parameters() { return {&weight, &bias}; }

  Index in_channels() const { return in_channels_; }
  Index filters() const { return weight.value.rows(); }
  void init_he_uniform(Rng& rng);

  Parameter<T> weight;
  Parameter<T> bias;

 private:
  Index in_channels_ = 0;
  std::optional<Sequence<T>> input_;
};

template <typename T>
class Relu {
 public:
  /// Clamps in place and remembers which entries passed.
  void forward(MatrixT<T>& x);
  void backward(MatrixT<T>& dy);

 private:
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> active_;
  bool ready_ = false;
};

/// Non-overlapping pool of width 2 along time. A trailing odd step is dropped;
/// ties route the gradient to the earlier step.
template <typename T>
class MaxPool1D {
 public:
  Sequence<T> forward(const Sequence<T>& x);
  Sequence<T> backward(const Sequence<T>& dy);
  /// True where the second element of a window won, per output entry.
  const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& second_won() const { return second_; }

 private:
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> second_;
  Index in_steps_ = 0;
  bool ready_ = false;
};

/// Standard LSTM. Gate rows are stacked [input; forget; output; candidate].
/// The input, forget and output gates carry a bias; the candidate does not.
template <typename T>
class Lstm {
 public:
  Lstm() = default;
  Lstm(Index input_size, Index units, const std::string& name);

  /// Returns the hidden state at every step (units x steps*batch); h0 = c0 = 0.
  Sequence<T> forward(Sequence<T> x);
  Sequence<T> backward(const Sequence<T>& dh);
  ParameterList<T> parameters() { return {&w_input, &w_recurrent, &bias}; }

  Index units() const { return w_recurrent.value.cols(); }
  Index input_size() const { return w_input.value.cols(); }
  void init_xavier_uniform(Rng& rng, double forget_bias = 1.0);

  Parameter<T> w_input;      // 4H x in
  Parameter<T> w_recurrent;  // 4H x H
  Parameter<T> bias;         // 3H x 1

 private:
  std::optional<Sequence<T>> input_;
  MatrixT<T> act_;  // 4H x TB gate activations; overwritten by gate gradients in backward
  MatrixT<T> cell_;
  MatrixT<T> tanh_cell_;
  MatrixT<T> hidden_;
};

template <typename T>
struct LstmState {
  VectorT<T> h;
  VectorT<T> c;
};

/// One time step on a single sample, written without any batching so it can
/// serve as a reference for Lstm::forward.
template <typename T>
LstmState<T> lstm_step(const VectorT<T>& x, const LstmState<T>& prev, const Lstm<T>& layer);

enum class Activation { Linear, Relu };

template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(Index in, Index out, Activation act, const std::string& name);

  /// x is in x batch.
  MatrixT<T> forward(const MatrixT<T>& x);
  MatrixT<T> backward(const MatrixT<T>& dy);
  ParameterList<T> parameters() { return {&weight, &bias}; }
  /// He-uniform for ReLU layers, Glorot-uniform for the linear head.
  void init_uniform(Rng& rng);

  Parameter<T> weight;  // out x in
  Parameter<T> bias;    // out x 1
  Activation activation = Activation::Linear;

 private:
  std::optional<MatrixT<T>> input_;
  Relu<T> relu_;
};

// ---------------------------------------------------------------------------

template <typename T>
struct LossResult {
  T value;
  MatrixT<T> grad;  // d loss / d pred
};

/// sqrt(mean((pred - target)^2)) over all entries. The gradient is defined as
/// zero where the loss is exactly zero.
template <typename T>
LossResult<T> rmse_loss(const MatrixT<T>& pred, const MatrixT<T>& target);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One bias-corrected update of every parameter from its grad.
  void step(const ParameterList<T>& params);
  std::int64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  std::int64_t step_ = 0;
  std::vector<MatrixT<T>> m_;
  std::vector<MatrixT<T>> v_;
};

// ---------------------------------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  Index worst_index = 0;
  std::size_t checked = 0;
  bool passed = true;
};

/// Relative error used by the checker: |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Central-difference check of every entry of every parameter.
/// `loss` runs a forward pass and returns the scalar loss; `gradients` runs
/// forward + backward and leaves d loss / d param in each Parameter::grad.
GradCheckReport gradient_check(const ParameterList<double>& params,
                               const std::function<double()>& loss,
                               const std::function<void()>& gradients, double eps, double tol);

}  // namespace doorfeel::nn
