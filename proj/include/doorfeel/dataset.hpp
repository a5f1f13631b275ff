// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

// On-disk dataset: a directory holding one profile JSON per recording and a
// manifest.json listing them:
//
//   {"cars": ["Genesis", ...],
//    "profiles": [{"car_id": "Genesis", "trial_id": "trial0", "file": "profiles/Genesis_trial0.json"}]}

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "doorfeel/model.hpp"
#include "doorfeel/profile.hpp"
#include "doorfeel/ratings.hpp"

namespace doorfeel {

struct Dataset {
  std::vector<std::string> cars;  // manifest order
  std::vector<NormalizedProfile> profiles;

  std::vector<NormalizedProfile> profiles_for(const std::string& car) const;
  void validate() const;
};

Dataset load_dataset(const std::filesystem::path& dir);
/// Writes profiles/<car>_<trial>.json and manifest.json under dir.
void save_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Recordings grouped by car, each paired with its car's averaged ratings.
using ExamplesByCar = std::map<std::string, std::vector<Example>>;

/// Every car in the dataset needs a rating row; rating rows for cars without
/// recordings are ignored.
ExamplesByCar join_ratings(const Dataset& dataset, const RatingsTable& ratings);

}  // namespace doorfeel
