// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include <doctest.h>

#include "doorfeel/error.hpp"
#include "doorfeel/nn.hpp"

using namespace doorfeel;
using namespace doorfeel::nn;

namespace {

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Direct cross-correlation with zero padding, one sample (channels x length).
Matrix conv_oracle(const Matrix& x, const Conv1D<double>& conv) {
  const Index cin = x.rows();
  const Index len = x.cols();
  Matrix y(conv.filters(), len);
  for (Index f = 0; f < conv.filters(); ++f) {
    for (Index t = 0; t < len; ++t) {
      double acc = conv.bias.value(f, 0);
      for (Index k = 0; k < 3; ++k) {
        const Index src = t + k - 1;
        if (src < 0 || src >= len) continue;
        for (Index c = 0; c < cin; ++c) acc += conv.weight.value(f, k * cin + c) * x(c, src);
      }
      y(f, t) = acc;
    }
  }
  return y;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Transcription of the gate equations for one sample and one step.
LstmState<double> lstm_equations(const Vector& x, const LstmState<double>& prev, const Lstm<double>& l) {
  const Index h = l.units();
  LstmState<double> out{Vector(h), Vector(h)};
  for (Index j = 0; j < h; ++j) {
    double zi = l.bias.value(j, 0), zf = l.bias.value(h + j, 0), zo = l.bias.value(2 * h + j, 0), zg = 0.0;
    for (Index k = 0; k < x.size(); ++k) {
      zi += l.w_input.value(j, k) * x(k);
      zf += l.w_input.value(h + j, k) * x(k);
      zo += l.w_input.value(2 * h + j, k) * x(k);
      zg += l.w_input.value(3 * h + j, k) * x(k);
    }
    for (Index k = 0; k < h; ++k) {
      zi += l.w_recurrent.value(j, k) * prev.h(k);
      zf += l.w_recurrent.value(h + j, k) * prev.h(k);
      zo += l.w_recurrent.value(2 * h + j, k) * prev.h(k);
      zg += l.w_recurrent.value(3 * h + j, k) * prev.h(k);
    }
    out.c(j) = sigmoid(zf) * prev.c(j) + sigmoid(zi) * std::tanh(zg);
    out.h(j) = sigmoid(zo) * std::tanh(out.c(j));
  }
  return out;
}

}  // namespace

TEST_CASE("conv1d examples") {
  Conv1D<double> conv(1, 1, "c");
  conv.weight.value << 1, 0, -1;
  Matrix x(1, 4);
  x << 1, 2, 3, 4;
  Matrix expected(1, 4);
  expected << -2, -2, -2, 3;
  CHECK(conv.forward(Sequence<double>::single(x)).data == expected);

  conv.weight.value << 0, 1, 0;
  CHECK(conv.forward(Sequence<double>::single(x)).data == x);

  conv.weight.value.setZero();
  conv.bias.value(0, 0) = 2.5;
  CHECK(conv.forward(Sequence<double>::single(x)).data == Matrix::Constant(1, 4, 2.5));
}

TEST_CASE("conv1d batched forward matches the direct oracle and keeps length") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Index cin = 1 + trial % 3, filters = 1 + trial % 4, len = 1 + trial, batch = 1 + trial % 3;
    Conv1D<double> conv(cin, filters, "c");
    conv.weight.value = random_matrix(filters, 3 * cin, rng);
    conv.bias.value = random_matrix(filters, 1, rng);
    std::vector<Matrix> samples;
    Sequence<double> x;
    x.steps = len;
    x.batch = batch;
    x.data.resize(cin, len * batch);
    for (Index b = 0; b < batch; ++b) {
      samples.push_back(random_matrix(cin, len, rng));
      for (Index t = 0; t < len; ++t) x.data.col(t * batch + b) = samples.back().col(t);
    }
    const auto y = conv.forward(x);
    CHECK(y.steps == len);
    for (Index b = 0; b < batch; ++b) {
      const Matrix ref = conv_oracle(samples[b], conv);
      for (Index t = 0; t < len; ++t) {
        CHECK((y.data.col(t * batch + b) - ref.col(t)).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  }
}

TEST_CASE("maxpool examples") {
  MaxPool1D<double> pool;
  Matrix x(1, 4);
  x << 1, 3, 2, 5;
  Matrix expected(1, 2);
  expected << 3, 5;
  CHECK(pool.forward(Sequence<double>::single(x)).data == expected);

  Matrix tie(1, 2);
  tie << 7, 7;
  CHECK(pool.forward(Sequence<double>::single(tie)).data(0, 0) == 7);
  CHECK_FALSE(pool.second_won()(0, 0));
  Sequence<double> g;
  g.steps = 1;
  g.data = Matrix::Ones(1, 1);
  const auto dx = pool.backward(g);
  CHECK(dx.data(0, 0) == 1.0);
  CHECK(dx.data(0, 1) == 0.0);

  CHECK_THROWS_AS(pool.forward(Sequence<double>::single(Matrix::Ones(1, 1))), ShapeError);
}

TEST_CASE("maxpool output dominates its window") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const Index len = 2 + trial;
    MaxPool1D<double> pool;
    const Matrix x = random_matrix(3, len, rng);
    const auto y = pool.forward(Sequence<double>::single(x));
    CHECK(y.steps == len / 2);
    for (Index t = 0; t < y.steps; ++t) {
      for (Index c = 0; c < 3; ++c) {
        CHECK(y.data(c, t) >= x(c, 2 * t));
        CHECK(y.data(c, t) >= x(c, 2 * t + 1));
      }
    }
  }
}

TEST_CASE("lstm_step examples") {
  Lstm<double> zero(3, 2, "l");
  const auto s = lstm_step<double>(Vector::Ones(3), {Vector::Zero(2), Vector::Zero(2)}, zero);
  CHECK(s.h.isZero());
  CHECK(s.c.isZero());

  Lstm<double> hold(3, 2, "l");
  std::mt19937_64 rng(3);
  hold.w_input.value = random_matrix(8, 3, rng, 0.1);
  hold.bias.value.topRows(2).setConstant(-40.0);      // input gate shut
  hold.bias.value.middleRows(2, 2).setConstant(40.0);  // forget gate open
  Vector c_prev(2);
  c_prev << 0.7, -1.3;
  const auto kept = lstm_step<double>(random_matrix(3, 1, rng), {Vector::Zero(2), c_prev}, hold);
  CHECK((kept.c - c_prev).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lstm matches the gate equations and chained steps") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const Index in = 1 + trial % 3, units = 1 + trial % 4, steps = 1 + trial % 5;
    Lstm<double> lstm(in, units, "l");
    lstm.w_input.value = random_matrix(4 * units, in, rng, 0.7);
    lstm.w_recurrent.value = random_matrix(4 * units, units, rng, 0.7);
    lstm.bias.value = random_matrix(3 * units, 1, rng, 0.5);
    const Matrix x = random_matrix(in, steps, rng);
    const auto out = lstm.forward(Sequence<double>::single(x));

    LstmState<double> state{Vector::Zero(units), Vector::Zero(units)};
    LstmState<double> chained = state;
    for (Index t = 0; t < steps; ++t) {
      state = lstm_equations(x.col(t), state, lstm);
      chained = lstm_step<double>(x.col(t), chained, lstm);
      CHECK((out.data.col(t) - state.h).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((chained.h - state.h).cwiseAbs().maxCoeff() < 1e-12);
      CHECK(out.data.col(t).cwiseAbs().maxCoeff() < 1.0);
    }
  }
  Lstm<double> zero(2, 3, "l");
  CHECK(zero.forward(Sequence<double>::single(Matrix::Ones(2, 4))).data.isZero());
}

TEST_CASE("dense examples") {
  Dense<double> id(2, 2, Activation::Linear, "d");
  id.weight.value.setIdentity();
  Matrix x(2, 1);
  x << 3, -4;
  CHECK(id.forward(x) == x);

  Dense<double> relu(2, 2, Activation::Relu, "d");
  relu.weight.value.setIdentity();
  Matrix expected(2, 1);
  expected << 3, 0;
  CHECK(relu.forward(x) == expected);

  Dense<double> lin(2, 2, Activation::Linear, "d");
  lin.weight.value << 1, 2, 3, 4;
  lin.bias.value << 0.5, -1;
  Matrix v(2, 1);
  v << 5, 6;
  Matrix hand(2, 1);
  hand << 1 * 5 + 2 * 6 + 0.5, 3 * 5 + 4 * 6 - 1;
  CHECK(lin.forward(v) == hand);
}

TEST_CASE("rmse loss") {
  Matrix a(3, 1);
  a << 1, 2, 3;
  CHECK(rmse_loss<double>(a, a).value == 0.0);
  CHECK(rmse_loss<double>(a, a).grad.isZero());
  CHECK(rmse_loss<double>(Matrix::Constant(1, 1, 3), Matrix::Zero(1, 1)).value == 3.0);
  CHECK(rmse_loss<double>(Matrix::Ones(2, 1), Matrix::Zero(2, 1)).value == 1.0);
  CHECK_THROWS_AS(rmse_loss<double>(Matrix::Ones(2, 1), Matrix::Zero(3, 1)), ShapeError);
}

TEST_CASE("single linear neuron gradient has the closed form") {
  Dense<double> d(1, 1, Activation::Linear, "d");
  d.weight.value(0, 0) = 0.8;
  const double x = 1.5, y = 2.0;
  const Matrix out = d.forward(Matrix::Constant(1, 1, x));
  // squared loss (wx - y)^2
  d.backward(Matrix::Constant(1, 1, 2.0 * (out(0, 0) - y)));
  CHECK(d.weight.grad(0, 0) == doctest::Approx(2.0 * x * (0.8 * x - y)));
}

TEST_CASE("backward before forward is a state error") {
  Conv1D<double> conv(1, 1, "c");
  Sequence<double> g;
  g.data = Matrix::Zero(1, 1);
  CHECK_THROWS_AS(conv.backward(g), StateError);
  Dense<double> d(1, 1, Activation::Linear, "d");
  CHECK_THROWS_AS(d.backward(Matrix::Zero(1, 1)), StateError);
  Lstm<double> l(1, 1, "l");
  CHECK_THROWS_AS(l.backward(g), StateError);
}

TEST_CASE("adam") {
  Parameter<double> p("w", 1, 1);
  p.value(0, 0) = 0.5;
  p.grad(0, 0) = 1.0;
  Adam<double> adam;
  adam.step({&p});
  CHECK(p.value(0, 0) == doctest::Approx(0.5 - 0.001).epsilon(1e-6));
  CHECK(adam.steps() == 1);

  Parameter<double> still("w", 2, 2);
  still.value << 1, 2, 3, 4;
  const Matrix before = still.value;
  Adam<double> idle;
  for (int i = 0; i < 10; ++i) idle.step({&still});
  CHECK(still.value == before);

  // f(w) = w^2 from w = 1
  Parameter<double> w("w", 1, 1);
  w.value(0, 0) = 1.0;
  Adam<double> opt;
  double prev = 1.0;
  int increases = 0;
  for (int i = 0; i < 1000; ++i) {
    w.grad(0, 0) = 2.0 * w.value(0, 0);
    opt.step({&w});
    if (std::abs(w.value(0, 0)) > prev) ++increases;
    prev = std::abs(w.value(0, 0));
  }
  CHECK(std::abs(w.value(0, 0)) < 0.5);
  CHECK(increases == 0);

  Parameter<double> other("w", 2, 1);
  CHECK_THROWS_AS(opt.step({&other}), ShapeError);
}

TEST_CASE("gradient_check on a tiny conv+dense net") {
  std::mt19937_64 rng(9);
  Conv1D<double> conv(1, 2, "c");
  Dense<double> dense(2 * 5, 3, Activation::Linear, "d");
  conv.init_he_uniform(rng);
  dense.init_uniform(rng);
  conv.bias.value = random_matrix(2, 1, rng, 0.1);
  const Matrix x = random_matrix(1, 5, rng);
  const Matrix y = random_matrix(3, 1, rng);

  ParameterList<double> params{&conv.weight, &conv.bias, &dense.weight, &dense.bias};
  auto run = [&] { return rmse_loss<double>(dense.forward(flatten(conv.forward(Sequence<double>::single(x)))), y); };
  auto loss = [&] { return run().value; };
  auto grads = [&] {
    const auto l = run();
    conv.backward(unflatten<double>(dense.backward(l.grad), 2, 5));
  };
  const auto report = gradient_check(params, loss, grads, 1e-5, 1e-4);
  CHECK(report.passed);
  CHECK(report.checked == parameter_count(params));

  auto corrupted = [&] {
    grads();
    dense.weight.grad(0, 0) *= 2.0;
  };
  CHECK_FALSE(gradient_check(params, loss, corrupted, 1e-5, 1e-4).passed);

  const auto empty = gradient_check({}, [] { return 0.0; }, [] {}, 1e-5, 1e-4);
  CHECK(empty.passed);
  CHECK(empty.checked == 0);
}

TEST_CASE("float and double layers agree") {
  std::mt19937_64 r1(5), r2(5);
  Lstm<double> ld(2, 3, "l");
  Lstm<float> lf(2, 3, "l");
  ld.init_xavier_uniform(r1);
  lf.init_xavier_uniform(r2);
  CHECK((ld.w_input.value.cast<float>() - lf.w_input.value).cwiseAbs().maxCoeff() == 0.0f);
  std::mt19937_64 rng(6);
  const Matrix x = random_matrix(2, 7, rng);
  const auto yd = ld.forward(Sequence<double>::single(x));
  const auto yf = lf.forward(Sequence<float>::single(x.cast<float>()));
  CHECK((yd.data.cast<float>() - yf.data).cwiseAbs().maxCoeff() < 1e-5f);
}
