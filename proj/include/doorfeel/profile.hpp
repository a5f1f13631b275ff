// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "doorfeel/signal_ingest.hpp"

namespace doorfeel {

inline constexpr int kMaxDegrees = 63;
inline constexpr int kSamplesPerDegree = 10;
inline constexpr int kProfileLength = kMaxDegrees * kSamplesPerDegree;  // 630

/// Angle-normalized force profile: 10 samples per degree over [0, 63) degrees,
/// zero past the widest angle the door reached.
struct NormalizedProfile {
  std::string car_id;
  std::string trial_id;
  std::vector<double> values;

  void validate() const;
};

/// Groups force magnitudes by degree: bin k holds samples with angle in [k, k+1),
/// in time order. Angles >= max_deg are dropped.
std::vector<std::vector<double>> bin_by_degree(const SynchronizedTrial& trial,
                                               int max_deg = kMaxDegrees);

/// Brings one bin to exactly n points. Longer bins are decimated by
/// endpoint-preserving uniform index selection, shorter non-empty bins are
/// linearly interpolated, empty bins become zeros.
std::vector<double> resample_bin(std::span<const double> bin, int n = kSamplesPerDegree);

/// Index picked for output slot i when decimating a bin of `bin_size` to `n`.
std::size_t decimation_index(std::size_t i, std::size_t bin_size, std::size_t n);

NormalizedProfile build_profile(const SynchronizedTrial& trial, std::string car_id,
                                std::string trial_id);

void save_profile(const NormalizedProfile& profile, const std::filesystem::path& path);
NormalizedProfile load_profile(const std::filesystem::path& path);

}  // namespace doorfeel
