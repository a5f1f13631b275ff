// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace doorfeel {

inline constexpr std::size_t kNumPairs = 10;

struct AdjectivePair {
  std::string_view negative_pole;  // maps to 0
  std::string_view positive_pole;  // maps to 100
};

/// The ten antonymous adjective pairs, in rating-column order.
std::span<const AdjectivePair, kNumPairs> adjective_pairs();

/// Short machine label for a pair, e.g. "jerky_easy".
std::string pair_label(std::size_t index);

enum class RatingScale { Percent, Unit };

/// Averaged perceptual ratings of one car on the 0..100 scale.
struct RatingVector {
  std::string car_id;
  std::array<double, kNumPairs> values{};
  RatingScale scale = RatingScale::Percent;

  void validate() const;
};

/// One participant's 7-point Likert answers for one car.
struct RawLikertSheet {
  std::string car_id;
  std::string participant_id;
  std::array<int, kNumPairs> scores{};

  void validate() const;
};

/// Affine map 1 -> 0, 7 -> 100.
double likert_to_percent(int score);

RatingVector average_ratings(std::span<const RawLikertSheet> sheets);

/// Population standard deviation of the mapped ratings, per pair.
std::array<double, kNumPairs> rating_dispersion(std::span<const RawLikertSheet> sheets);

/// Contents of a ratings CSV. Either per-participant Likert sheets
/// (`car_id,participant_id,p1..p10`) or already-averaged percent ratings
/// (`car_id,p1..p10`); `sheets` is empty in the latter case.
struct RatingsTable {
  std::map<std::string, RatingVector> by_car;
  std::vector<RawLikertSheet> sheets;

  /// Mean over cars and pairs of the per-pair rating dispersion, when at least
  /// one car has two or more participants.
  std::optional<double> mean_dispersion() const;
};

RatingsTable parse_ratings_csv(std::istream& in);
RatingsTable parse_ratings_csv(const std::filesystem::path& path);

void write_averaged_ratings_csv(std::ostream& out, std::span<const RatingVector> ratings);

/// Catalog as CSV: `index,label,negative_pole,positive_pole`.
void write_catalog_csv(std::ostream& out);

}  // namespace doorfeel
