// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include "doorfeel/nn.hpp"

#include <algorithm>
#include <cmath>

#include "doorfeel/error.hpp"

namespace doorfeel::nn {

namespace {

template <typename T>
void fill_uniform(MatrixT<T>& m, double limit, Rng& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  // Drawn in double and column-major order so float and double networks
  // built from the same seed start from the same weights.
  for (Index c = 0; c < m.cols(); ++c) {
    for (Index r = 0; r < m.rows(); ++r) m(r, c) = static_cast<T>(dist(rng));
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& z) {
  using T = typename Derived::Scalar;
  return T(1) / (T(1) + (-z).exp());
}

// Eigen's double tanh is scalar; this form vectorizes through exp.
template <typename Derived>
auto fast_tanh(const Eigen::ArrayBase<Derived>& z) {
  using T = typename Derived::Scalar;
  return T(2) / (T(1) + (T(-2) * z).exp()) - T(1);
}

}  // namespace

template <typename T>
Sequence<T> Sequence<T>::from_columns(const MatrixT<T>& series) {
  Sequence s;
  s.steps = series.rows();
  s.batch = series.cols();
  s.data.resize(1, s.steps * s.batch);
  for (Index t = 0; t < s.steps; ++t) {
    for (Index b = 0; b < s.batch; ++b) s.data(0, t * s.batch + b) = series(t, b);
  }
  return s;
}

template <typename T>
MatrixT<T> flatten(const Sequence<T>& x) {
  const Index channels = x.channels();
  MatrixT<T> flat(channels * x.steps, x.batch);
  for (Index b = 0; b < x.batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      for (Index t = 0; t < x.steps; ++t) flat(c * x.steps + t, b) = x.data(c, t * x.batch + b);
    }
  }
  return flat;
}

template <typename T>
Sequence<T> unflatten(const MatrixT<T>& flat, Index channels, Index steps) {
  require(flat.rows() == channels * steps, "unflatten: feature count mismatch");
  Sequence<T> x;
  x.steps = steps;
  x.batch = flat.cols();
  x.data.resize(channels, steps * x.batch);
  for (Index b = 0; b < x.batch; ++b) {
    for (Index c = 0; c < channels; ++c) {
      for (Index t = 0; t < steps; ++t) x.data(c, t * x.batch + b) = flat(c * steps + t, b);
    }
  }
  return x;
}

// --- Conv1D -----------------------------------------------------------------

template <typename T>
Conv1D<T>::Conv1D(Index in_channels, Index filters, const std::string& name)
    : weight(name + ".weight", filters, kKernel * in_channels),
      bias(name + ".bias", filters, 1),
      in_channels_(in_channels) {
  require(in_channels > 0 && filters > 0, "conv1d: sizes must be positive");
}

template <typename T>
void Conv1D<T>::init_he_uniform(Rng& rng) {
  fill_uniform(weight.value, std::sqrt(6.0 / static_cast<double>(kKernel * in_channels_)), rng);
  bias.value.setZero();
}

template <typename T>
Sequence<T> Conv1D<T>::forward(Sequence<T> x) {
  require(x.channels() == in_channels_, "conv1d: expected " + std::to_string(in_channels_) +
                                            " input channels, got " + std::to_string(x.channels()));
  require(x.steps >= 1, "conv1d: empty sequence");
  const Index cin = in_channels_;
  const Index shifted = (x.steps - 1) * x.batch;
  Sequence<T> y;
  y.steps = x.steps;
  y.batch = x.batch;
  y.data.noalias() = weight.value.middleCols(cin, cin) * x.data;
  if (shifted > 0) {
    y.data.rightCols(shifted).noalias() += weight.value.leftCols(cin) * x.data.leftCols(shifted);
    y.data.leftCols(shifted).noalias() += weight.value.rightCols(cin) * x.data.rightCols(shifted);
  }
  y.data.colwise() += bias.value.col(0);
  input_ = std::move(x);
  return y;
}

template <typename T>
Sequence<T> Conv1D<T>::backward(const Sequence<T>& dy) {
  if (!input_) throw StateError("conv1d: backward called before forward");
  const Sequence<T>& x = *input_;
  require(dy.data.rows() == filters() && dy.data.cols() == x.data.cols(),
          "conv1d: gradient shape mismatch");
  const Index cin = in_channels_;
  const Index shifted = (x.steps - 1) * x.batch;

  bias.grad += dy.data.rowwise().sum();
  weight.grad.middleCols(cin, cin).noalias() += dy.data * x.data.transpose();
  Sequence<T> dx;
  dx.steps = x.steps;
  dx.batch = x.batch;
  dx.data.noalias() = weight.value.middleCols(cin, cin).transpose() * dy.data;
  if (shifted > 0) {
    weight.grad.leftCols(cin).noalias() +=
        dy.data.rightCols(shifted) * x.data.leftCols(shifted).transpose();
    weight.grad.rightCols(cin).noalias() +=
        dy.data.leftCols(shifted) * x.data.rightCols(shifted).transpose();
    dx.data.leftCols(shifted).noalias() +=
        weight.value.leftCols(cin).transpose() * dy.data.rightCols(shifted);
    dx.data.rightCols(shifted).noalias() +=
        weight.value.rightCols(cin).transpose() * dy.data.leftCols(shifted);
  }
  input_.reset();
  return dx;
}

// --- Relu -------------------------------------------------------------------

template <typename T>
void Relu<T>::forward(MatrixT<T>& x) {
  active_ = x.array() > T(0);
  x = x.cwiseMax(T(0));
  ready_ = true;
}

template <typename T>
void Relu<T>::backward(MatrixT<T>& dy) {
  if (!ready_) throw StateError("relu: backward called before forward");
  require(dy.rows() == active_.rows() && dy.cols() == active_.cols(),
          "relu: gradient shape mismatch");
  dy = active_.select(dy, T(0));
  ready_ = false;
}

// --- MaxPool1D --------------------------------------------------------------

template <typename T>
Sequence<T> MaxPool1D<T>::forward(const Sequence<T>& x) {
  require(x.steps >= 2, "maxpool1d: need at least 2 steps, got " + std::to_string(x.steps));
  const Index out_steps = x.steps / 2;
  const Index b = x.batch;
  Sequence<T> y;
  y.steps = out_steps;
  y.batch = b;
  y.data.resize(x.channels(), out_steps * b);
  second_.resize(x.channels(), out_steps * b);
  for (Index t = 0; t < out_steps; ++t) {
    const auto first = x.data.middleCols(2 * t * b, b).array();
    const auto second = x.data.middleCols((2 * t + 1) * b, b).array();
    second_.middleCols(t * b, b) = second > first;
    y.data.middleCols(t * b, b) = second_.middleCols(t * b, b).select(second, first).matrix();
  }
  in_steps_ = x.steps;
  ready_ = true;
  return y;
}

template <typename T>
Sequence<T> MaxPool1D<T>::backward(const Sequence<T>& dy) {
  if (!ready_) throw StateError("maxpool1d: backward called before forward");
  require(dy.data.rows() == second_.rows() && dy.data.cols() == second_.cols(),
          "maxpool1d: gradient shape mismatch");
  const Index b = dy.batch;
  Sequence<T> dx;
  dx.steps = in_steps_;
  dx.batch = b;
  dx.data.resize(dy.data.rows(), in_steps_ * b);
  for (Index t = 0; t < dy.steps; ++t) {
    const auto g = dy.data.middleCols(t * b, b).array();
    const auto won = second_.middleCols(t * b, b);
    dx.data.middleCols(2 * t * b, b) = won.select(T(0), g).matrix();
    dx.data.middleCols((2 * t + 1) * b, b) = won.select(g, T(0)).matrix();
  }
  if (in_steps_ % 2 == 1) dx.data.rightCols(b).setZero();
  ready_ = false;
  return dx;
}

// --- Lstm -------------------------------------------------------------------

template <typename T>
Lstm<T>::Lstm(Index input_size, Index units, const std::string& name)
    : w_input(name + ".w_input", 4 * units, input_size),
      w_recurrent(name + ".w_recurrent", 4 * units, units),
      bias(name + ".bias", 3 * units, 1) {
  require(input_size > 0 && units > 0, "lstm: sizes must be positive");
}

template <typename T>
void Lstm<T>::init_xavier_uniform(Rng& rng, double forget_bias) {
  const auto h = static_cast<double>(units());
  const auto in = static_cast<double>(input_size());
  fill_uniform(w_input.value, std::sqrt(6.0 / (in + 4.0 * h)), rng);
  fill_uniform(w_recurrent.value, std::sqrt(6.0 / (h + 4.0 * h)), rng);
  bias.value.setZero();
  bias.value.middleRows(units(), units()).setConstant(static_cast<T>(forget_bias));
}

template <typename T>
Sequence<T> Lstm<T>::forward(Sequence<T> x) {
  require(x.channels() == input_size(), "lstm: expected input size " +
                                            std::to_string(input_size()) + ", got " +
                                            std::to_string(x.channels()));
  require(x.steps >= 1, "lstm: empty sequence");
  const Index h = units();
  const Index b = x.batch;
  const Index cols = x.steps * b;

  act_.resize(4 * h, cols);
  act_.noalias() = w_input.value * x.data;
  act_.topRows(3 * h).colwise() += bias.value.col(0);
  cell_.resize(h, cols);
  tanh_cell_.resize(h, cols);
  hidden_.resize(h, cols);

  for (Index t = 0; t < x.steps; ++t) {
    auto z = act_.middleCols(t * b, b);
    if (t > 0) z.noalias() += w_recurrent.value * hidden_.middleCols((t - 1) * b, b);
    z.topRows(3 * h) = sigmoid(z.topRows(3 * h).array()).matrix();
    z.bottomRows(h) = fast_tanh(z.bottomRows(h).array()).matrix();
    const auto gate_i = z.topRows(h).array();
    const auto gate_f = z.middleRows(h, h).array();
    const auto gate_o = z.middleRows(2 * h, h).array();
    const auto cand = z.bottomRows(h).array();
    auto c = cell_.middleCols(t * b, b);
    if (t > 0) {
      c = (gate_f * cell_.middleCols((t - 1) * b, b).array() + gate_i * cand).matrix();
    } else {
      c = (gate_i * cand).matrix();
    }
    tanh_cell_.middleCols(t * b, b) = fast_tanh(c.array()).matrix();
    hidden_.middleCols(t * b, b) = (gate_o * tanh_cell_.middleCols(t * b, b).array()).matrix();
  }
  input_ = std::move(x);
  Sequence<T> out;
  out.steps = input_->steps;
  out.batch = b;
  out.data = hidden_;
  return out;
}

template <typename T>
Sequence<T> Lstm<T>::backward(const Sequence<T>& dh_out) {
  if (!input_) throw StateError("lstm: backward called before forward");
  const Sequence<T>& x = *input_;
  const Index h = units();
  const Index b = x.batch;
  require(dh_out.data.rows() == h && dh_out.data.cols() == x.steps * b,
          "lstm: gradient shape mismatch");

  using Array = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic>;
  MatrixT<T> dh_next = MatrixT<T>::Zero(h, b);
  Array dc_next = Array::Zero(h, b);
  Array dh(h, b);
  Array dc(h, b);
  // act_ is rewritten in place with d loss / d gate pre-activation.
  for (Index t = x.steps - 1; t >= 0; --t) {
    auto z = act_.middleCols(t * b, b);
    auto gate_i = z.topRows(h).array();
    auto gate_f = z.middleRows(h, h).array();
    auto gate_o = z.middleRows(2 * h, h).array();
    auto cand = z.bottomRows(h).array();
    const auto tc = tanh_cell_.middleCols(t * b, b).array();

    dh = dh_out.data.middleCols(t * b, b).array() + dh_next.array();
    dc = dh * gate_o * (T(1) - tc.square()) + dc_next;
    dc_next = dc * gate_f;

    // Each row block is read and then overwritten by its own gradient.
    gate_o = dh * tc * gate_o * (T(1) - gate_o);
    if (t > 0) {
      gate_f = dc * cell_.middleCols((t - 1) * b, b).array() * gate_f * (T(1) - gate_f);
    } else {
      gate_f.setZero();
    }
    const Array di = dc * cand * gate_i * (T(1) - gate_i);
    cand = dc * gate_i * (T(1) - cand.square());
    gate_i = di;

    if (t > 0) dh_next.noalias() = w_recurrent.value.transpose() * z;
  }

  const MatrixT<T>& dz = act_;
  const Index shifted = (x.steps - 1) * b;
  w_input.grad.noalias() += dz * x.data.transpose();
  if (shifted > 0) {
    w_recurrent.grad.noalias() += dz.rightCols(shifted) * hidden_.leftCols(shifted).transpose();
  }
  bias.grad += dz.topRows(3 * h).rowwise().sum();

  Sequence<T> dx;
  dx.steps = x.steps;
  dx.batch = b;
  dx.data.noalias() = w_input.value.transpose() * dz;
  input_.reset();
  return dx;
}

template <typename T>
LstmState<T> lstm_step(const VectorT<T>& x, const LstmState<T>& prev, const Lstm<T>& layer) {
  const Index h = layer.units();
  if (x.size() != layer.input_size() || prev.h.size() != h || prev.c.size() != h) {
    throw ShapeError("lstm_step: shape mismatch");
  }
  const MatrixT<T>& wx = layer.w_input.value;
  const MatrixT<T>& wh = layer.w_recurrent.value;
  const VectorT<T> bias = layer.bias.value.col(0);
  auto pre = [&](Index gate) -> VectorT<T> {
    return wx.middleRows(gate * h, h) * x + wh.middleRows(gate * h, h) * prev.h;
  };
  auto sig = [](const VectorT<T>& v) -> VectorT<T> {
    return v.unaryExpr([](T s) { return T(1) / (T(1) + std::exp(-s)); });
  };
  auto tanh = [](const VectorT<T>& v) -> VectorT<T> {
    return v.unaryExpr([](T s) { return std::tanh(s); });
  };
  const VectorT<T> i = sig(pre(0) + bias.segment(0, h));
  const VectorT<T> f = sig(pre(1) + bias.segment(h, h));
  const VectorT<T> o = sig(pre(2) + bias.segment(2 * h, h));
  const VectorT<T> g = tanh(pre(3));
  LstmState<T> next;
  next.c = f.cwiseProduct(prev.c) + i.cwiseProduct(g);
  next.h = o.cwiseProduct(tanh(next.c));
  return next;
}

// --- Dense ------------------------------------------------------------------

template <typename T>
Dense<T>::Dense(Index in, Index out, Activation act, const std::string& name)
    : weight(name + ".weight", out, in), bias(name + ".bias", out, 1), activation(act) {
  require(in > 0 && out > 0, "dense: sizes must be positive");
}

template <typename T>
void Dense<T>::init_uniform(Rng& rng) {
  const auto in = static_cast<double>(weight.value.cols());
  const auto out = static_cast<double>(weight.value.rows());
  const double limit =
      activation == Activation::Relu ? std::sqrt(6.0 / in) : std::sqrt(6.0 / (in + out));
  fill_uniform(weight.value, limit, rng);
  bias.value.setZero();
}

template <typename T>
MatrixT<T> Dense<T>::forward(const MatrixT<T>& x) {
  require(x.rows() == weight.value.cols(), "dense: expected " +
                                               std::to_string(weight.value.cols()) +
                                               " inputs, got " + std::to_string(x.rows()));
  input_ = x;
  MatrixT<T> z = weight.value * x;
  z.colwise() += bias.value.col(0);
  if (activation == Activation::Relu) relu_.forward(z);
  return z;
}

template <typename T>
MatrixT<T> Dense<T>::backward(const MatrixT<T>& dy) {
  if (!input_) throw StateError("dense: backward called before forward");
  require(dy.rows() == weight.value.rows() && dy.cols() == input_->cols(),
          "dense: gradient shape mismatch");
  MatrixT<T> dz = dy;
  if (activation == Activation::Relu) relu_.backward(dz);
  weight.grad.noalias() += dz * input_->transpose();
  bias.grad += dz.rowwise().sum();
  MatrixT<T> dx = weight.value.transpose() * dz;
  input_.reset();
  return dx;
}

// --- loss / optimizer -------------------------------------------------------

template <typename T>
LossResult<T> rmse_loss(const MatrixT<T>& pred, const MatrixT<T>& target) {
  require(pred.rows() == target.rows() && pred.cols() == target.cols() && pred.size() > 0,
          "rmse: prediction and target shapes differ");
  const MatrixT<T> diff = pred - target;
  const auto n = static_cast<T>(diff.size());
  const T loss = std::sqrt(diff.squaredNorm() / n);
  if (loss == T(0)) return {T(0), MatrixT<T>::Zero(pred.rows(), pred.cols())};
  return {loss, diff / (n * loss)};
}

template <typename T>
void Adam<T>::step(const ParameterList<T>& params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.push_back(MatrixT<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(MatrixT<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  require(m_.size() == params.size(), "adam: parameter list changed between steps");
  ++step_;
  const auto b1 = static_cast<T>(config_.beta1);
  const auto b2 = static_cast<T>(config_.beta2);
  const auto c1 = static_cast<T>(1.0 - std::pow(config_.beta1, static_cast<double>(step_)));
  const auto c2 = static_cast<T>(1.0 - std::pow(config_.beta2, static_cast<double>(step_)));
  const auto lr = static_cast<T>(config_.lr);
  const auto eps = static_cast<T>(config_.eps);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<T>& p = *params[k];
    require(p.grad.rows() == p.value.rows() && p.grad.cols() == p.value.cols() &&
                m_[k].rows() == p.value.rows() && m_[k].cols() == p.value.cols(),
            "adam: shape mismatch for " + p.name);
    m_[k] = b1 * m_[k] + (T(1) - b1) * p.grad;
    v_[k] = b2 * v_[k] + (T(1) - b2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= lr * (m_[k].array() / c1) / ((v_[k].array() / c2).sqrt() + eps);
  }
}

// --- gradient check ---------------------------------------------------------

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport gradient_check(const ParameterList<double>& params,
                               const std::function<double()>& loss,
                               const std::function<void()>& gradients, double eps, double tol) {
  zero_grads(params);
  gradients();
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (const auto* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter<double>& p = *params[k];
    for (Index i = 0; i < p.value.size(); ++i) {
      double& w = p.value.data()[i];
      const double saved = w;
      w = saved + eps;
      const double up = loss();
      w = saved - eps;
      const double down = loss();
      w = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = relative_error(analytic[k].data()[i], numeric);
      if (report.checked++ == 0 || err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_parameter = p.name;
        report.worst_index = i;
      }
    }
  }
  report.passed = report.max_rel_error < tol;
  return report;
}

// --- instantiations ---------------------------------------------------------

#define DOORFEEL_NN_INSTANTIATE(T)                                                           \
  template struct Sequence<T>;                                                               \
  template MatrixT<T> flatten<T>(const Sequence<T>&);                                        \
  template Sequence<T> unflatten<T>(const MatrixT<T>&, Index, Index);                        \
  template class Conv1D<T>;                                                                  \
  template class Relu<T>;                                                                    \
  template class MaxPool1D<T>;                                                               \
  template class Lstm<T>;                                                                    \
  template LstmState<T> lstm_step<T>(const VectorT<T>&, const LstmState<T>&, const Lstm<T>&); \
  template class Dense<T>;                                                                   \
  template LossResult<T> rmse_loss<T>(const MatrixT<T>&, const MatrixT<T>&);                 \
  template class Adam<T>;

DOORFEEL_NN_INSTANTIATE(float)
DOORFEEL_NN_INSTANTIATE(double)

#undef DOORFEEL_NN_INSTANTIATE

}  // namespace doorfeel::nn
