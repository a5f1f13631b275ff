// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include "doorfeel/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "doorfeel/error.hpp"
#include "text_util.hpp"

namespace doorfeel {

namespace {

using nn::Index;
using nn::Matrix;

constexpr char kCheckpointMagic[8] = {'D', 'F', 'C', 'K', 'P', 'T', '\0', '\1'};
constexpr std::uint32_t kCheckpointVersion = 1;

void check(bool ok, const std::string& what) {
  if (!ok) throw ValidationError("model config: " + what);
}

}  // namespace

// --- ModelConfig -------------------------------------------------------------

void ModelConfig::validate() const {
  check(input_length >= 2, "input_length must be >= 2");
  check(!conv_filters.empty() && !lstm_units.empty() && !dense_units.empty(),
        "every stream needs at least one layer");
  for (int f : conv_filters) check(f > 0, "conv filter counts must be positive");
  for (int u : lstm_units) check(u > 0, "LSTM unit counts must be positive");
  for (int d : dense_units) check(d > 0, "dense sizes must be positive");
  check(dense_units.back() == static_cast<int>(kNumPairs),
        "final dense layer must have " + std::to_string(kNumPairs) + " units");
  check(lstm_pool == 2, "lstm_pool must be 2");
  std::set<int> seen;
  for (int p : conv_pool_after) {
    check(p >= 0 && p < static_cast<int>(conv_filters.size()), "pool position out of range");
    check(seen.insert(p).second, "duplicate pool position");
  }
  int length = input_length;
  for (std::size_t i = 0; i < conv_filters.size(); ++i) {
    if (seen.contains(static_cast<int>(i))) {
      check(length >= 2, "sequence too short for pooling");
      length /= 2;
    }
  }
  check(learning_rate >= 0.0 && std::isfinite(learning_rate), "learning_rate must be >= 0");
  check(epochs >= 1, "epochs must be >= 1");
  check(batch_size >= 0, "batch_size must be >= 0");
  if (!allow_override) {
    const ModelConfig ref;
    check(input_length == ref.input_length && conv_filters == ref.conv_filters &&
              conv_pool_after == ref.conv_pool_after && lstm_units == ref.lstm_units &&
              dense_units == ref.dense_units,
          "layer sizes differ from the reference topology; set allow_override to use them");
  }
}

ModelConfig ModelConfig::shrunken() {
  ModelConfig c;
  c.input_length = 40;
  c.conv_filters = {8, 4, 4, 4};
  c.lstm_units = {8, 4, 4};
  c.dense_units = {8, 4, 10};
  c.allow_override = true;
  return c;
}

nlohmann::json ModelConfig::to_json() const {
  return {
      {"input_length", input_length},
      {"conv_filters", conv_filters},
      {"conv_pool_after", conv_pool_after},
      {"lstm_units", lstm_units},
      {"lstm_pool", lstm_pool},
      {"dense_units", dense_units},
      {"learning_rate", learning_rate},
      {"epochs", epochs},
      {"seed", seed},
      {"batch_size", batch_size},
      {"target_scaling", target_scaling == TargetScaling::Unit ? "unit" : "percent"},
      {"allow_override", allow_override},
      {"precision", precision == Precision::Float32 ? "float32" : "float64"},
  };
}

ModelConfig ModelConfig::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("model config: expected a JSON object");
  ModelConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "input_length") c.input_length = value.get<int>();
      else if (key == "conv_filters") c.conv_filters = value.get<std::vector<int>>();
      else if (key == "conv_pool_after") c.conv_pool_after = value.get<std::vector<int>>();
      else if (key == "lstm_units") c.lstm_units = value.get<std::vector<int>>();
      else if (key == "lstm_pool") c.lstm_pool = value.get<int>();
      else if (key == "dense_units") c.dense_units = value.get<std::vector<int>>();
      else if (key == "learning_rate") c.learning_rate = value.get<double>();
      else if (key == "epochs") c.epochs = value.get<int>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "batch_size") c.batch_size = value.get<int>();
      else if (key == "allow_override") c.allow_override = value.get<bool>();
      else if (key == "precision") {
        const auto s = value.get<std::string>();
        if (s == "float32") c.precision = Precision::Float32;
        else if (s == "float64") c.precision = Precision::Float64;
        else throw ValidationError("model config: unknown precision '" + s + "'");
      } else if (key == "target_scaling") {
        const auto s = value.get<std::string>();
        if (s == "unit") c.target_scaling = TargetScaling::Unit;
        else if (s == "percent") c.target_scaling = TargetScaling::Percent;
        else throw ValidationError("model config: unknown target_scaling '" + s + "'");
      } else {
        throw ValidationError("model config: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

std::string ModelConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(detail::fnv1a(to_json().dump())));
  return buf;
}

// --- Network -----------------------------------------------------------------

template <typename T>
BasicNetwork<T>::BasicNetwork(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  nn::Rng rng(seed);

  Index channels = 1;
  Index length = config_.input_length;
  for (std::size_t i = 0; i < config_.conv_filters.size(); ++i) {
    convs_.emplace_back(channels, config_.conv_filters[i], "cnn.conv" + std::to_string(i + 1));
    convs_.back().init_he_uniform(rng);
    conv_relus_.emplace_back();
    channels = config_.conv_filters[i];
    const bool pooled = std::find(config_.conv_pool_after.begin(), config_.conv_pool_after.end(),
                                  static_cast<int>(i)) != config_.conv_pool_after.end();
    if (pooled) {
      conv_pools_.emplace_back(nn::MaxPool1D<T>{});
      length /= 2;
    } else {
      conv_pools_.emplace_back(std::nullopt);
    }
  }
  cnn_channels_ = channels;
  cnn_steps_ = length;

  Index input = 1;
  for (std::size_t i = 0; i < config_.lstm_units.size(); ++i) {
    lstms_.emplace_back(input, config_.lstm_units[i], "lstm.layer" + std::to_string(i + 1));
    lstms_.back().init_xavier_uniform(rng, 1.0);
    input = config_.lstm_units[i];
  }
  lstm_channels_ = input;
  lstm_steps_ = config_.input_length / 2;

  Index features = cnn_features() + lstm_features();
  for (std::size_t i = 0; i < config_.dense_units.size(); ++i) {
    const bool last = i + 1 == config_.dense_units.size();
    dense_.emplace_back(features, config_.dense_units[i],
                        last ? nn::Activation::Linear : nn::Activation::Relu,
                        "head.dense" + std::to_string(i + 1));
    dense_.back().init_uniform(rng);
    features = config_.dense_units[i];
  }
}

template <typename T>
auto BasicNetwork<T>::forward(const MatrixType& inputs) -> MatrixType {
  if (inputs.rows() != config_.input_length) {
    throw ShapeError("network: expected input length " + std::to_string(config_.input_length) +
                     ", got " + std::to_string(inputs.rows()));
  }
  if (inputs.cols() < 1) throw ShapeError("network: empty batch");
  nn::Sequence<T> x = nn::Sequence<T>::from_columns(inputs);

  nn::Sequence<T> cnn = x;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    cnn = convs_[i].forward(std::move(cnn));
    conv_relus_[i].forward(cnn.data);
    if (conv_pools_[i]) cnn = conv_pools_[i]->forward(cnn);
  }

  nn::Sequence<T> rec = std::move(x);
  for (auto& lstm : lstms_) rec = lstm.forward(std::move(rec));
  rec = lstm_pool_.forward(rec);

  MatrixType out(cnn_features() + lstm_features(), inputs.cols());
  out.topRows(cnn_features()) = nn::flatten(cnn);
  out.bottomRows(lstm_features()) = nn::flatten(rec);
  for (auto& d : dense_) out = d.forward(out);
  forward_done_ = true;
  return out;
}

template <typename T>
void BasicNetwork<T>::backward(const MatrixType& d_output) {
  if (!forward_done_) throw StateError("network: backward called before forward");
  MatrixType grad = d_output;
  for (auto it = dense_.rbegin(); it != dense_.rend(); ++it) grad = it->backward(grad);

  nn::Sequence<T> d_rec =
      nn::unflatten<T>(grad.bottomRows(lstm_features()), lstm_channels_, lstm_steps_);
  d_rec = lstm_pool_.backward(d_rec);
  for (auto it = lstms_.rbegin(); it != lstms_.rend(); ++it) d_rec = it->backward(d_rec);

  nn::Sequence<T> d_cnn = nn::unflatten<T>(grad.topRows(cnn_features()), cnn_channels_, cnn_steps_);
  for (std::size_t k = convs_.size(); k-- > 0;) {
    if (conv_pools_[k]) d_cnn = conv_pools_[k]->backward(d_cnn);
    conv_relus_[k].backward(d_cnn.data);
    d_cnn = convs_[k].backward(d_cnn);
  }
  forward_done_ = false;
}

template <typename T>
nn::ParameterList<T> BasicNetwork<T>::parameters() {
  nn::ParameterList<T> out;
  auto append = [&out](nn::ParameterList<T> ps) { out.insert(out.end(), ps.begin(), ps.end()); };
  for (auto& c : convs_) append(c.parameters());
  for (auto& l : lstms_) append(l.parameters());
  for (auto& d : dense_) append(d.parameters());
  return out;
}

template <typename T>
std::vector<ShapeEntry> BasicNetwork<T>::shape_manifest() const {
  std::vector<ShapeEntry> out;
  auto add = [&out](const nn::Parameter<T>& p) {
    out.push_back({p.name, p.value.rows(), p.value.cols()});
  };
  for (const auto& c : convs_) {
    add(c.weight);
    add(c.bias);
  }
  for (const auto& l : lstms_) {
    add(l.w_input);
    add(l.w_recurrent);
    add(l.bias);
  }
  for (const auto& d : dense_) {
    add(d.weight);
    add(d.bias);
  }
  return out;
}

template <typename T>
std::size_t BasicNetwork<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : shape_manifest()) n += static_cast<std::size_t>(e.rows * e.cols);
  return n;
}

template class BasicNetwork<float>;
template class BasicNetwork<double>;

// --- training / inference ---------------------------------------------------

Model build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  return Model(config, seed);
}

Matrix stack_profiles(std::span<const NormalizedProfile> profiles, const InputScaler& scaler,
                      int input_length) {
  Matrix x(input_length, static_cast<Index>(profiles.size()));
  for (std::size_t j = 0; j < profiles.size(); ++j) {
    const auto& v = profiles[j].values;
    if (v.size() != static_cast<std::size_t>(input_length)) {
      throw ShapeError("profile " + profiles[j].car_id + "/" + profiles[j].trial_id +
                       ": expected length " + std::to_string(input_length) + ", got " +
                       std::to_string(v.size()));
    }
    for (int t = 0; t < input_length; ++t) {
      x(t, static_cast<Index>(j)) = (v[static_cast<std::size_t>(t)] - scaler.mean) / scaler.stddev;
    }
  }
  return x;
}

namespace {

template <typename T>
TrainResult run_epochs(BasicNetwork<T>& network, const ModelConfig& cfg,
                       const nn::MatrixT<T>& inputs, const nn::MatrixT<T>& targets) {
  const Index n = inputs.cols();
  const Index batch = cfg.batch_size == 0 ? n : std::min<Index>(cfg.batch_size, n);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  nn::Rng shuffle_rng(cfg.seed ^ 0x5851f42d4c957f2dULL);

  auto params = network.parameters();
  nn::Adam<T> adam(nn::AdamConfig{.lr = cfg.learning_rate});
  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
  nn::MatrixT<T> xb;
  nn::MatrixT<T> yb;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (batch < n) std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (Index start = 0; start < n; start += batch) {
      const Index size = std::min(batch, n - start);
      xb.resize(inputs.rows(), size);
      yb.resize(targets.rows(), size);
      for (Index j = 0; j < size; ++j) {
        xb.col(j) = inputs.col(order[static_cast<std::size_t>(start + j)]);
        yb.col(j) = targets.col(order[static_cast<std::size_t>(start + j)]);
      }
      const auto loss = nn::rmse_loss<T>(network.forward(xb), yb);
      nn::zero_grads(params);
      network.backward(loss.grad);
      adam.step(params);
      epoch_loss += static_cast<double>(loss.value) * static_cast<double>(size);
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

}  // namespace

TrainResult train(Model& model, std::span<const Example> data) {
  if (data.empty()) throw ValidationError("train: empty dataset");
  const ModelConfig& cfg = model.config;

  double sum = 0.0;
  double sq = 0.0;
  std::size_t count = 0;
  for (const auto& ex : data) {
    for (double v : ex.profile.values) {
      sum += v;
      sq += v * v;
      ++count;
    }
  }
  if (count == 0) throw ValidationError("train: profiles are empty");
  const double mean = sum / static_cast<double>(count);
  const double var = std::max(0.0, sq / static_cast<double>(count) - mean * mean);
  model.scaler = InputScaler{mean, var > 0.0 ? std::sqrt(var) : 1.0};

  std::vector<NormalizedProfile> profiles;
  profiles.reserve(data.size());
  const double target_scale = cfg.target_scaling == TargetScaling::Unit ? 0.01 : 1.0;
  Matrix targets(static_cast<Index>(kNumPairs), static_cast<Index>(data.size()));
  for (std::size_t j = 0; j < data.size(); ++j) {
    data[j].rating.validate();
    profiles.push_back(data[j].profile);
    for (std::size_t p = 0; p < kNumPairs; ++p) {
      targets(static_cast<Index>(p), static_cast<Index>(j)) = data[j].rating.values[p] * target_scale;
    }
  }
  const Matrix inputs = stack_profiles(profiles, model.scaler, cfg.input_length);

  TrainResult result;
  if (cfg.precision == Precision::Float64) {
    result = run_epochs(model.network, cfg, inputs, targets);
  } else {
    BasicNetwork<float> fast(cfg, cfg.seed);
    fast.copy_weights_from(model.network);
    result = run_epochs(fast, cfg, inputs.cast<float>().eval(), targets.cast<float>().eval());
    model.network.copy_weights_from(fast);
  }
  return result;
}

std::vector<RatingVector> predict(Model& model, std::span<const NormalizedProfile> profiles) {
  if (profiles.empty()) return {};
  const Matrix x = stack_profiles(profiles, model.scaler, model.config.input_length);
  const Matrix y = model.network.forward(x);
  const double scale = model.config.target_scaling == TargetScaling::Unit ? 100.0 : 1.0;
  std::vector<RatingVector> out;
  out.reserve(profiles.size());
  for (std::size_t j = 0; j < profiles.size(); ++j) {
    RatingVector r;
    r.car_id = profiles[j].car_id;
    for (std::size_t p = 0; p < kNumPairs; ++p) {
      const double v = y(static_cast<Index>(p), static_cast<Index>(j)) * scale;
      if (!std::isfinite(v)) throw Error("predict: non-finite network output");
      r.values[p] = std::clamp(v, 0.0, 100.0);
    }
    out.push_back(std::move(r));
  }
  return out;
}

RatingVector predict(Model& model, const NormalizedProfile& profile) {
  return predict(model, std::span<const NormalizedProfile>(&profile, 1)).front();
}

nn::GradCheckReport gradient_check(Network& network, std::uint64_t data_seed,
                                   const GradCheckOptions& options) {
  nn::Rng rng(data_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto batch = static_cast<Index>(std::max<std::size_t>(options.batch, 1));
  Matrix x(network.config().input_length, batch);
  for (Index c = 0; c < x.cols(); ++c) {
    for (Index r = 0; r < x.rows(); ++r) x(r, c) = normal(rng);
  }
  Matrix y(network.config().dense_units.back(), batch);
  for (Index c = 0; c < y.cols(); ++c) {
    for (Index r = 0; r < y.rows(); ++r) y(r, c) = unit(rng);
  }

  const auto params = network.parameters();
  if (options.bias_jitter > 0.0) {
    std::uniform_real_distribution<double> jitter(-options.bias_jitter, options.bias_jitter);
    for (auto* p : params) {
      if (p->value.cols() != 1) continue;
      for (Index i = 0; i < p->value.size(); ++i) p->value(i) += jitter(rng);
    }
  }
  auto loss = [&] { return nn::rmse_loss(network.forward(x), y).value; };
  auto gradients = [&] {
    const auto l = nn::rmse_loss(network.forward(x), y);
    network.backward(l.grad);
    if (!options.corrupt) return;
    nn::Parameter<double>* worst = nullptr;
    Index worst_i = 0;
    double worst_abs = -1.0;
    for (auto* p : params) {
      Index i = 0;
      const double a =
          Eigen::Map<const nn::Vector>(p->grad.data(), p->grad.size()).cwiseAbs().maxCoeff(&i);
      if (a > worst_abs) {
        worst_abs = a;
        worst = p;
        worst_i = i;
      }
    }
    if (worst != nullptr) worst->grad.data()[worst_i] *= 2.0;
  };
  return nn::gradient_check(params, loss, gradients, options.eps, options.tol);
}

// --- checkpoints --------------------------------------------------------------

void save_checkpoint(Model& model, const std::filesystem::path& path,
                     const nlohmann::json& provenance) {
  static_assert(std::endian::native == std::endian::little, "checkpoint payload is little-endian");
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& e : model.network.shape_manifest()) {
    shapes.push_back({{"name", e.name}, {"rows", e.rows}, {"cols", e.cols}});
  }
  const nlohmann::json manifest = {
      {"format", "doorfeel-checkpoint"},
      {"version", kCheckpointVersion},
      {"config", model.config.to_json()},
      {"scaler", {{"mean", model.scaler.mean}, {"stddev", model.scaler.stddev}}},
      {"parameters", shapes},
      {"provenance", provenance},
  };
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t length = text.size();
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : model.network.parameters()) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  std::uint32_t version = 0;
  std::uint64_t length = 0;
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&length), sizeof(length));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kCheckpointMagic))) {
    throw ParseError(path.string() + ": not a doorfeel checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw ParseError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": bad manifest: " + e.what());
  }
  const auto config = ModelConfig::from_json(manifest.at("config"));
  Model model = build(config, config.seed);
  model.scaler.mean = manifest.at("scaler").at("mean").get<double>();
  model.scaler.stddev = manifest.at("scaler").at("stddev").get<double>();

  const auto expected = model.network.shape_manifest();
  const auto& shapes = manifest.at("parameters");
  if (shapes.size() != expected.size()) throw ParseError(path.string() + ": parameter count mismatch");
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const ShapeEntry got{shapes[k].at("name").get<std::string>(), shapes[k].at("rows").get<Index>(),
                         shapes[k].at("cols").get<Index>()};
    if (!(got == expected[k])) throw ParseError(path.string() + ": shape mismatch at " + got.name);
  }
  for (auto* p : model.network.parameters()) {
    in.read(reinterpret_cast<char*>(p->value.data()),
            static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!in) throw ParseError(path.string() + ": truncated payload");
  return model;
}

}  // namespace doorfeel
