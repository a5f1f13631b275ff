// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic door-opening profiles with a deterministic rating oracle, so the
// whole pipeline can run without recorded data.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "doorfeel/profile.hpp"
#include "doorfeel/ratings.hpp"

namespace doorfeel {

struct Detent {
  double center_deg = 0.0;
  double width_deg = 1.0;  // Gaussian standard deviation
  double height = 0.0;     // newtons
};

struct SyntheticCarSpec {
  std::string name;
  double base_force = 0.0;        // N
  double weight_amplitude = 0.0;  // N, peak of the half-sine term
  std::vector<Detent> detents;
  double friction_slope = 0.0;  // N per degree
  double noise_sigma = 0.0;     // N
  double max_angle = kMaxDegrees;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticCarSpec from_json(const nlohmann::json& doc);
  static SyntheticCarSpec load(const std::filesystem::path& path);
};

/// Noise-free force at angle theta (degrees), before clamping.
double synth_force(const SyntheticCarSpec& spec, double theta);

/// Samples the spec at theta = i / 10 for every i with theta < max_angle,
/// adds N(0, noise_sigma) noise seeded by (spec.seed, trial_seed), clamps at 0
/// and zero-pads to 630 samples.
NormalizedProfile synth_profile(const SyntheticCarSpec& spec, std::uint64_t trial_seed);

/// Summary statistics of the noiseless profile that drive the rating oracle.
struct ProfileStats {
  double mean_force = 0.0;   // over the sampled range
  double peak_force = 0.0;
  double roughness = 0.0;    // total variation per degree
  double detent_energy = 0.0;  // sum of squared detent contribution / 10
  double slope = 0.0;          // least-squares N per degree
  double travel = 0.0;         // degrees sampled
};

ProfileStats profile_stats(const SyntheticCarSpec& spec);

/// Rating oracle: value_p = clamp(offset_p + sum_k weight_pk * stat_k, 0, 100).
RatingVector synth_ratings(const SyntheticCarSpec& spec);

/// Coefficients of the oracle, one row per adjective pair:
/// {offset, mean, peak, roughness, detent_energy, slope, travel}.
const std::array<std::array<double, 7>, kNumPairs>& rating_map();

/// The six specs shipped in data/specs.
std::vector<SyntheticCarSpec> default_car_specs();

}  // namespace doorfeel
