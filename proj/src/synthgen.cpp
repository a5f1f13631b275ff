// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include "doorfeel/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "doorfeel/error.hpp"

namespace doorfeel {

namespace {

double detent_sum(const SyntheticCarSpec& spec, double theta) {
  double sum = 0.0;
  for (const auto& d : spec.detents) {
    const double z = (theta - d.center_deg) / d.width_deg;
    sum += d.height * std::exp(-0.5 * z * z);
  }
  return sum;
}

std::size_t sample_count(const SyntheticCarSpec& spec) {
  // theta = i / 10 < max_angle
  const auto n = static_cast<std::size_t>(std::ceil(spec.max_angle * kSamplesPerDegree - 1e-9));
  return std::min<std::size_t>(n, kProfileLength);
}

std::vector<double> noiseless(const SyntheticCarSpec& spec) {
  const std::size_t n = sample_count(spec);
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    f[i] = synth_force(spec, static_cast<double>(i) / kSamplesPerDegree);
  }
  return f;
}

// Columns: offset, mean, peak, roughness, detent energy, slope, travel.
constexpr std::array<std::array<double, 7>, kNumPairs> kRatingMap{{
    {85.0, 0.0, 0.0, -30.0, -0.25, 0.0, 0.0},    // jerky .. easy to operate
    {5.0, 0.0, 0.0, 45.0, 0.2, 0.0, 0.0},        // smooth .. rough
    {75.0, -1.0, 0.0, 0.0, 0.0, -100.0, 0.0},    // frictional .. frictionless
    {110.0, -1.5, -1.2, 0.0, 0.0, 0.0, 0.0},     // hard to pull .. easy to open
    {75.0, 0.0, 0.0, 20.0, 0.0, 0.0, -0.8},      // balanced .. unstable
    {-5.0, 0.0, 2.2, 0.0, 0.1, 0.0, 0.0},        // soft .. hard
    {20.0, 1.5, 0.0, -25.0, 0.0, 0.0, 0.5},      // cheap .. classy
    {30.0, 0.0, 0.0, 0.0, 0.2, 80.0, 0.0},       // damped .. recoiling
    {90.0, 0.0, 0.0, -40.0, -0.2, 0.0, 0.0},     // discordant .. consistent
    {100.0, -2.4, 0.0, 0.0, 0.0, 0.0, 0.0},      // heavy .. light
}};

}  // namespace

void SyntheticCarSpec::validate() const {
  auto fail = [this](const std::string& what) {
    throw ValidationError("synthetic spec '" + name + "': " + what);
  };
  const double scalars[] = {base_force, weight_amplitude, friction_slope, noise_sigma, max_angle};
  for (double v : scalars) {
    if (!std::isfinite(v)) fail("non-finite field");
  }
  if (!(max_angle > 1.0 && max_angle <= kMaxDegrees)) fail("max_angle must be in (1, 63]");
  if (noise_sigma < 0.0) fail("noise_sigma must be >= 0");
  for (const auto& d : detents) {
    if (!std::isfinite(d.center_deg) || !std::isfinite(d.height) || !std::isfinite(d.width_deg)) {
      fail("non-finite detent");
    }
    if (d.width_deg <= 0.0) fail("detent width must be > 0");
  }
}

nlohmann::json SyntheticCarSpec::to_json() const {
  nlohmann::json ds = nlohmann::json::array();
  for (const auto& d : detents) {
    ds.push_back({{"center_deg", d.center_deg}, {"width_deg", d.width_deg}, {"height", d.height}});
  }
  return {{"name", name},
          {"base_force", base_force},
          {"weight_amplitude", weight_amplitude},
          {"detents", ds},
          {"friction_slope", friction_slope},
          {"noise_sigma", noise_sigma},
          {"max_angle", max_angle},
          {"seed", seed}};
}

SyntheticCarSpec SyntheticCarSpec::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ParseError("synthetic spec: expected a JSON object");
  SyntheticCarSpec s;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "name") s.name = value.get<std::string>();
      else if (key == "base_force") s.base_force = value.get<double>();
      else if (key == "weight_amplitude") s.weight_amplitude = value.get<double>();
      else if (key == "friction_slope") s.friction_slope = value.get<double>();
      else if (key == "noise_sigma") s.noise_sigma = value.get<double>();
      else if (key == "max_angle") s.max_angle = value.get<double>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else if (key == "detents") {
        for (const auto& d : value) {
          s.detents.push_back({d.at("center_deg").get<double>(), d.at("width_deg").get<double>(),
                               d.at("height").get<double>()});
        }
      } else {
        throw ValidationError("synthetic spec: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synthetic spec: ") + e.what());
  }
  if (s.name.empty()) throw ValidationError("synthetic spec: missing name");
  s.validate();
  return s;
}

SyntheticCarSpec SyntheticCarSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

double synth_force(const SyntheticCarSpec& spec, double theta) {
  return spec.base_force + spec.weight_amplitude * std::sin(theta * std::numbers::pi / 126.0) +
         spec.friction_slope * theta + detent_sum(spec, theta);
}

NormalizedProfile synth_profile(const SyntheticCarSpec& spec, std::uint64_t trial_seed) {
  spec.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(trial_seed),
                    static_cast<std::uint32_t>(trial_seed >> 32)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> noise(0.0, 1.0);

  NormalizedProfile p;
  p.car_id = spec.name;
  p.trial_id = "trial" + std::to_string(trial_seed);
  p.values.assign(kProfileLength, 0.0);
  const auto clean = noiseless(spec);
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const double n = spec.noise_sigma > 0.0 ? spec.noise_sigma * noise(rng) : 0.0;
    p.values[i] = std::max(0.0, clean[i] + n);
  }
  return p;
}

ProfileStats profile_stats(const SyntheticCarSpec& spec) {
  spec.validate();
  std::vector<double> f = noiseless(spec);
  for (double& v : f) v = std::max(0.0, v);
  ProfileStats s;
  const auto n = static_cast<double>(f.size());
  s.travel = n / kSamplesPerDegree;
  if (f.empty()) return s;

  double sum = 0.0;
  double tv = 0.0;
  double energy = 0.0;
  double st = 0.0;
  double stt = 0.0;
  double sft = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double theta = static_cast<double>(i) / kSamplesPerDegree;
    sum += f[i];
    s.peak_force = std::max(s.peak_force, f[i]);
    if (i > 0) tv += std::abs(f[i] - f[i - 1]);
    const double bump = detent_sum(spec, theta);
    energy += bump * bump;
    st += theta;
    stt += theta * theta;
    sft += theta * f[i];
  }
  s.mean_force = sum / n;
  s.roughness = tv / s.travel;
  s.detent_energy = energy / kSamplesPerDegree;
  const double var = stt / n - (st / n) * (st / n);
  s.slope = var > 0.0 ? (sft / n - (st / n) * s.mean_force) / var : 0.0;
  return s;
}

const std::array<std::array<double, 7>, kNumPairs>& rating_map() { return kRatingMap; }

RatingVector synth_ratings(const SyntheticCarSpec& spec) {
  const ProfileStats s = profile_stats(spec);
  const std::array<double, 6> x{s.mean_force, s.peak_force, s.roughness,
                                s.detent_energy, s.slope, s.travel};
  RatingVector r;
  r.car_id = spec.name;
  r.scale = RatingScale::Percent;
  for (std::size_t p = 0; p < kNumPairs; ++p) {
    double v = kRatingMap[p][0];
    for (std::size_t k = 0; k < x.size(); ++k) v += kRatingMap[p][k + 1] * x[k];
    r.values[p] = std::clamp(v, 0.0, 100.0);
  }
  return r;
}

std::vector<SyntheticCarSpec> default_car_specs() {
  // Heavy and smooth at one end, light with sharp detents (K3) at the other.
  return {
      {"Genesis", 22.0, 10.0, {{20.0, 4.0, 2.0}, {45.0, 4.0, 2.0}}, 0.05, 0.5, 63.0, 101},
      {"Grandeur", 20.0, 9.0, {{25.0, 3.0, 3.0}, {48.0, 3.0, 2.5}}, 0.08, 0.5, 62.0, 102},
      {"K3", 8.0, 3.0, {{12.0, 1.0, 6.0}, {28.0, 1.0, 7.0}, {44.0, 1.0, 6.0}}, 0.15, 0.3, 55.0, 103},
      {"K5", 14.0, 6.0, {{22.0, 2.0, 3.5}, {46.0, 2.0, 3.0}}, 0.06, 0.4, 60.0, 104},
      {"Santafe", 18.0, 12.0, {{30.0, 2.5, 4.0}}, -0.05, 0.6, 63.0, 105},
      {"Sorento", 17.0, 11.0, {{18.0, 2.0, 3.0}, {40.0, 2.5, 4.0}}, 0.02, 0.5, 61.0, 106},
  };
}

}  // namespace doorfeel
