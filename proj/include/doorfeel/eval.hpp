// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "doorfeel/dataset.hpp"
#include "doorfeel/model.hpp"
#include "doorfeel/ratings.hpp"

namespace doorfeel {

/// Mean rating dispersion used for the coverage bands when no rater data is available.
inline constexpr double kDefaultSigma = 20.96;

/// Leave-one-car-out protocol over six named cars. One car is never used for
/// training; when it is the test car, a second car is also left out so every
/// fold trains on four cars.
struct FoldProtocol {
  std::vector<std::string> labels{"Genesis", "Grandeur", "K3", "K5", "Santafe", "Sorento"};
  std::string never_train = "K3";
  std::string dropped_with_never_train = "Santafe";
  std::map<std::string, std::string> aliases;  // dataset car id -> label

  std::string canonical(const std::string& car) const;
};

struct FoldSpec {
  std::string test_car;
  std::vector<std::string> train_cars;  // protocol label order
};

/// One fold per car, in protocol label order. Car ids may be aliases; folds
/// carry the ids as given.
std::vector<FoldSpec> make_folds(std::span<const std::string> cars, const FoldProtocol& protocol = {});

/// Throws ValidationError if the folds break any protocol rule.
void check_folds(std::span<const FoldSpec> folds, const FoldProtocol& protocol = {});

struct MaeResult {
  std::array<double, kNumPairs> errors{};
  double mean = 0.0;
};

/// Both vectors must be on the 0..100 scale.
MaeResult mae(const RatingVector& pred, const RatingVector& target);

struct BandCoverage {
  double within_half_sigma = 0.0;
  double within_sigma = 0.0;
  std::size_t points = 0;
};

/// Fraction of points with |pred - target| <= sigma / 2 and <= sigma.
BandCoverage band_analysis(std::span<const double> preds, std::span<const double> targets, double sigma);

using MaeGrid = std::vector<std::array<double, kNumPairs>>;

struct GridSummary {
  std::vector<double> row_means;                // per car
  std::array<double, kNumPairs> column_means{};  // per pair
  double overall = 0.0;                          // mean of all cells
};

GridSummary summarize_grid(const MaeGrid& grid);

struct LoocvOptions {
  ModelConfig config;
  FoldProtocol protocol;
  unsigned workers = 1;
  /// Skip training and predict the targets exactly.
  bool oracle = false;
  double sigma = kDefaultSigma;
  std::string sigma_source = "default";
};

struct FoldResult {
  FoldSpec fold;
  std::uint64_t seed = 0;
  std::vector<double> loss_history;
  std::size_t test_recordings = 0;
};

struct LoocvReport {
  std::vector<std::string> cars;  // grid row order
  std::vector<FoldResult> folds;
  std::map<std::string, RatingVector> predictions;  // mean over the car's test recordings
  std::map<std::string, RatingVector> targets;
  MaeGrid grid;
  GridSummary summary;
  double sigma = kDefaultSigma;
  std::string sigma_source = "default";
  BandCoverage coverage;
  nlohmann::json provenance = nlohmann::json::object();

  nlohmann::json to_json() const;
  static LoocvReport from_json(const nlohmann::json& doc);

  /// Grid with per-car means as the last column and per-pair means as the last row.
  void write_grid_csv(std::ostream& out) const;
  /// One row per (car, pair): car,pair,label,target,pred.
  void write_scatter_csv(std::ostream& out) const;

  /// All (pred, target) points, car-major.
  std::pair<std::vector<double>, std::vector<double>> points() const;
};

/// Seed of the model trained on a given set of cars: a hash of the master seed
/// and the sorted car labels, so identical training sets share one model.
std::uint64_t fold_seed(std::uint64_t master_seed, std::vector<std::string> train_labels);

LoocvReport run_loocv(const ExamplesByCar& data, const LoocvOptions& options);

/// Rebuilds grid, summary and coverage from predictions and targets.
void recompute(LoocvReport& report);

}  // namespace doorfeel
