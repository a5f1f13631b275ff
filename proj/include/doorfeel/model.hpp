// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "doorfeel/nn.hpp"
#include "doorfeel/profile.hpp"
#include "doorfeel/ratings.hpp"

namespace doorfeel {

inline constexpr std::uint64_t kDefaultSeed = 42;

enum class TargetScaling {
  Unit,     // ratings / 100 during training, outputs * 100 for reporting
  Percent,  // train directly on the 0..100 scale
};

/// Scalar type used while training. Stored weights and inference are float64.
enum class Precision { Float32, Float64 };

/// Layer sizes and training hyperparameters of the two-stream network.
/// Sizes other than the reference ones are rejected unless allow_override.
struct ModelConfig {
  int input_length = kProfileLength;
  std::vector<int> conv_filters{256, 128, 128, 64};
  std::vector<int> conv_pool_after{0, 3};  // conv indices followed by a width-2 pool
  std::vector<int> lstm_units{128, 64, 64};
  int lstm_pool = 2;
  std::vector<int> dense_units{64, 32, 10};
  double learning_rate = 0.001;
  int epochs = 100;
  std::uint64_t seed = kDefaultSeed;
  int batch_size = 0;  // 0 means full batch
  TargetScaling target_scaling = TargetScaling::Unit;
  bool allow_override = false;
  Precision precision = Precision::Float32;

  void validate() const;

  /// Small topology used for gradient checks (input length 40).
  static ModelConfig shrunken();

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& doc);
  static ModelConfig load(const std::filesystem::path& path);
  /// FNV-1a of the canonical JSON dump, as 16 hex digits.
  std::string hash() const;
};

struct ShapeEntry {
  std::string name;
  nn::Index rows;
  nn::Index cols;

  bool operator==(const ShapeEntry&) const = default;
};

/// CNN stream and LSTM stream over the same input, concatenated into a dense head.
template <typename T>
class BasicNetwork {
 public:
  using MatrixType = nn::MatrixT<T>;

  BasicNetwork(const ModelConfig& config, std::uint64_t seed);

  /// inputs: input_length x batch. Returns outputs x batch.
  MatrixType forward(const MatrixType& inputs);
  /// Accumulates parameter gradients for the last forward pass.
  void backward(const MatrixType& d_output);

  nn::ParameterList<T> parameters();
  std::vector<ShapeEntry> shape_manifest() const;
  std::size_t parameter_count() const;
  const ModelConfig& config() const { return config_; }
  nn::Index cnn_features() const { return cnn_channels_ * cnn_steps_; }
  nn::Index lstm_features() const { return lstm_channels_ * lstm_steps_; }

  std::vector<nn::Dense<T>>& dense_layers() { return dense_; }

  /// Copies weights from a network of the same topology, converting the scalar type.
  template <typename U>
  void copy_weights_from(BasicNetwork<U>& other) {
    auto dst = parameters();
    auto src = other.parameters();
    if (dst.size() != src.size()) throw std::invalid_argument("copy_weights_from: topology mismatch");
    for (std::size_t k = 0; k < dst.size(); ++k) {
      if (dst[k]->value.rows() != src[k]->value.rows() ||
          dst[k]->value.cols() != src[k]->value.cols()) {
        throw std::invalid_argument("copy_weights_from: shape mismatch at " + dst[k]->name);
      }
      dst[k]->value = src[k]->value.template cast<T>();
    }
  }

 private:
  ModelConfig config_;
  std::vector<nn::Conv1D<T>> convs_;
  std::vector<nn::Relu<T>> conv_relus_;
  std::vector<std::optional<nn::MaxPool1D<T>>> conv_pools_;
  std::vector<nn::Lstm<T>> lstms_;
  nn::MaxPool1D<T> lstm_pool_;
  std::vector<nn::Dense<T>> dense_;
  nn::Index cnn_channels_ = 0;
  nn::Index cnn_steps_ = 0;
  nn::Index lstm_channels_ = 0;
  nn::Index lstm_steps_ = 0;
  bool forward_done_ = false;
};

extern template class BasicNetwork<float>;
extern template class BasicNetwork<double>;

using Network = BasicNetwork<double>;

/// Affine input standardization fitted on the training recordings.
struct InputScaler {
  double mean = 0.0;
  double stddev = 1.0;
};

/// Trainable network plus everything needed to run it on raw profiles.
struct Model {
  ModelConfig config;
  Network network;
  InputScaler scaler;

  Model(const ModelConfig& c, std::uint64_t seed) : config(c), network(c, seed) {}
};

/// Validates the config and initializes all weights deterministically from seed.
Model build(const ModelConfig& config, std::uint64_t seed);
inline Model build(const ModelConfig& config) { return build(config, config.seed); }

struct Example {
  NormalizedProfile profile;
  RatingVector rating;
};

struct TrainResult {
  std::vector<double> loss_history;  // one entry per epoch, on the training scale
};

/// Fits the scaler on `data`, then runs config.epochs of Adam on the RMSE loss.
TrainResult train(Model& model, std::span<const Example> data);

/// Ratings on the 0..100 scale, clamped.
RatingVector predict(Model& model, const NormalizedProfile& profile);
std::vector<RatingVector> predict(Model& model, std::span<const NormalizedProfile> profiles);

/// input_length x n matrix of standardized profiles.
nn::Matrix stack_profiles(std::span<const NormalizedProfile> profiles, const InputScaler& scaler,
                          int input_length);

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  std::size_t batch = 2;
  bool corrupt = false;  // doubles the analytic gradient of the largest entry
  /// Offsets zero-initialized biases by U(-j, j) first. With zero biases a ReLU
  /// whose whole receptive field is dead sits exactly on its kink.
  double bias_jitter = 0.1;
};

/// Central-difference check of the whole network on random inputs and targets.
nn::GradCheckReport gradient_check(Network& network, std::uint64_t data_seed,
                                   const GradCheckOptions& options = {});

/// Versioned binary checkpoint: magic, JSON manifest, then float64 payload.
void save_checkpoint(Model& model, const std::filesystem::path& path,
                     const nlohmann::json& provenance = nlohmann::json::object());
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace doorfeel
