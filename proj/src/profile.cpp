// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include "doorfeel/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "doorfeel/error.hpp"

namespace doorfeel {

void NormalizedProfile::validate() const {
  if (values.size() != static_cast<std::size_t>(kProfileLength)) {
    throw ValidationError("profile " + car_id + "/" + trial_id + ": expected " +
                          std::to_string(kProfileLength) + " values, got " +
                          std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) {
      throw ValidationError("profile " + car_id + "/" + trial_id +
                            ": values must be finite and non-negative");
    }
  }
}

std::vector<std::vector<double>> bin_by_degree(const SynchronizedTrial& trial, int max_deg) {
  if (max_deg < 1) throw ValidationError("bin_by_degree: max_deg must be >= 1");
  std::vector<std::vector<double>> bins(static_cast<std::size_t>(max_deg));
  for (const auto& s : trial.samples) {
    if (!(s.angle >= 0.0) || s.angle >= max_deg) continue;
    bins[static_cast<std::size_t>(std::floor(s.angle))].push_back(s.force_mag);
  }
  return bins;
}

std::size_t decimation_index(std::size_t i, std::size_t bin_size, std::size_t n) {
  // round(i * (m - 1) / (n - 1)) with halves rounded up, in integers.
  const std::size_t num = 2 * i * (bin_size - 1) + (n - 1);
  return num / (2 * (n - 1));
}

std::vector<double> resample_bin(std::span<const double> bin, int n) {
  if (n < 2) throw ValidationError("resample_bin: n must be >= 2");
  const auto count = static_cast<std::size_t>(n);
  std::vector<double> out(count, 0.0);
  const std::size_t m = bin.size();
  if (m == 0) return out;
  if (m >= count) {
    for (std::size_t i = 0; i < count; ++i) out[i] = bin[decimation_index(i, m, count)];
    return out;
  }
  if (m == 1) {
    std::fill(out.begin(), out.end(), bin[0]);
    return out;
  }
  for (std::size_t i = 0; i < count; ++i) {
    const double x = static_cast<double>(i) * static_cast<double>(m - 1) / static_cast<double>(count - 1);
    const auto lo = std::min(static_cast<std::size_t>(std::floor(x)), m - 2);
    const double frac = x - static_cast<double>(lo);
    out[i] = frac == 0.0 ? bin[lo] : bin[lo] + frac * (bin[lo + 1] - bin[lo]);
  }
  return out;
}

NormalizedProfile build_profile(const SynchronizedTrial& trial, std::string car_id,
                                std::string trial_id) {
  if (trial.samples.empty()) throw ValidationError("build_profile: empty trial");
  trial.validate();
  bool opened = false;
  for (const auto& s : trial.samples) opened = opened || s.angle >= 1.0;
  if (!opened) throw ValidationError("build_profile: door never opened past 1 degree");

  NormalizedProfile profile{std::move(car_id), std::move(trial_id), {}};
  profile.values.reserve(kProfileLength);
  for (const auto& bin : bin_by_degree(trial, kMaxDegrees)) {
    const auto part = resample_bin(bin, kSamplesPerDegree);
    profile.values.insert(profile.values.end(), part.begin(), part.end());
  }
  profile.validate();
  return profile;
}

void save_profile(const NormalizedProfile& profile, const std::filesystem::path& path) {
  profile.validate();
  const nlohmann::json doc = {
      {"car_id", profile.car_id}, {"trial_id", profile.trial_id}, {"values", profile.values}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump() << '\n';
}

NormalizedProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  NormalizedProfile profile;
  try {
    const auto doc = nlohmann::json::parse(in);
    profile.car_id = doc.at("car_id").get<std::string>();
    profile.trial_id = doc.at("trial_id").get<std::string>();
    profile.values = doc.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  profile.validate();
  return profile;
}

}  // namespace doorfeel
