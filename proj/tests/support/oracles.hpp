// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

// Naive reference implementations used as test oracles. Written as plain
// loops, independent of the library code paths they check.

#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "doorfeel/signal_ingest.hpp"

namespace doorfeel::testing {

/// Degree-by-degree scan over every sample, then per-bin resampling to 10.
inline std::vector<double> brute_force_profile(const SynchronizedTrial& trial) {
  std::vector<double> out;
  for (int deg = 0; deg < 63; ++deg) {
    std::vector<double> bin;
    for (const auto& s : trial.samples) {
      if (s.angle >= deg && s.angle < deg + 1) bin.push_back(s.force_mag);
    }
    const std::size_t m = bin.size();
    for (int i = 0; i < 10; ++i) {
      double v = 0.0;
      if (m >= 10) {
        // nearest index on an evenly spaced grid from the first to the last sample
        const double pos = i * static_cast<double>(m - 1) / 9.0;
        v = bin[static_cast<std::size_t>(std::floor(pos + 0.5))];
      } else if (m == 1) {
        v = bin[0];
      } else if (m > 1) {
        const double pos = i * static_cast<double>(m - 1) / 9.0;
        std::size_t lo = static_cast<std::size_t>(pos);
        if (lo == m - 1) lo = m - 2;
        const double frac = pos - static_cast<double>(lo);
        v = frac == 0.0 ? bin[lo] : bin[lo] + frac * (bin[lo + 1] - bin[lo]);
      }
      out.push_back(v);
    }
  }
  return out;
}

/// Random opening: mostly increasing angle with jitter, varying sample density
/// (so some degree bins are sparse and some dense), random maximum angle.
inline SynchronizedTrial random_trial(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double max_angle = 5.0 + 65.0 * unit(rng);  // sometimes beyond 63
  const int samples = 50 + static_cast<int>(unit(rng) * 1500);
  SynchronizedTrial trial;
  double angle = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double step = max_angle / samples * (0.2 + 1.6 * unit(rng));
    angle = std::min(max_angle, angle + step);
    const double jitter = unit(rng) < 0.05 ? -0.5 * unit(rng) : 0.0;
    trial.samples.push_back({i * 1e-3, 20.0 * unit(rng), std::max(0.0, angle + jitter)});
  }
  return trial;
}

}  // namespace doorfeel::testing
