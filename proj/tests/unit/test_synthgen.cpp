// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "doorfeel/error.hpp"
#include "doorfeel/synthgen.hpp"

using namespace doorfeel;

namespace {

SyntheticCarSpec flat_spec(double base) {
  SyntheticCarSpec s;
  s.name = "flat";
  s.base_force = base;
  return s;
}

}  // namespace

TEST_CASE("synth_profile examples") {
  const auto zero = synth_profile(flat_spec(0.0), 1);
  REQUIRE(zero.values.size() == kProfileLength);
  CHECK(std::all_of(zero.values.begin(), zero.values.end(), [](double v) { return v == 0.0; }));
  CHECK(zero.car_id == "flat");
  CHECK(zero.trial_id == "trial1");

  const auto five = synth_profile(flat_spec(5.0), 1);
  CHECK(std::all_of(five.values.begin(), five.values.end(), [](double v) { return v == 5.0; }));

  auto bump = flat_spec(0.0);
  bump.detents.push_back({30.0, 2.0, 3.0});
  const auto p = synth_profile(bump, 0);
  const auto argmax = std::max_element(p.values.begin(), p.values.end()) - p.values.begin();
  CHECK(argmax == 300);
  CHECK(p.values[300] == doctest::Approx(3.0));
}

TEST_CASE("shorter travel is zero padded") {
  auto s = flat_spec(4.0);
  s.max_angle = 50.0;
  const auto p = synth_profile(s, 0);
  CHECK(p.values[499] == 4.0);
  CHECK(std::all_of(p.values.begin() + 500, p.values.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("synth_profile determinism and noise") {
  auto s = default_car_specs().front();
  CHECK(synth_profile(s, 3).values == synth_profile(s, 3).values);
  CHECK(synth_profile(s, 3).values != synth_profile(s, 4).values);
  s.noise_sigma = 0.0;
  const auto first = synth_profile(s, 0).values;
  for (std::uint64_t t = 1; t < 10; ++t) CHECK(synth_profile(s, t).values == first);
  for (double v : synth_profile(default_car_specs()[2], 7).values) CHECK(v >= 0.0);
}

TEST_CASE("rating oracle examples") {
  const auto zero = synth_ratings(flat_spec(0.0));
  CHECK(zero.values[9] == 100.0);
  for (double v : zero.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 100.0);
  }

  // heavier door, lighter rating
  double prev = 101.0;
  for (double base : {2.0, 6.0, 10.0, 14.0, 18.0}) {
    const double light = synth_ratings(flat_spec(base)).values[9];
    CHECK(light < prev);
    prev = light;
  }
}

TEST_CASE("rating oracle ignores noise and is frozen for the shipped specs") {
  auto s = default_car_specs().front();
  const auto r = synth_ratings(s);
  s.noise_sigma = 3.0;
  CHECK(synth_ratings(s).values == r.values);

  const double genesis[kNumPairs] = {63.7, 27.0, 22.6, 21.7, 29.3, 78.5, 91.5, 58.8, 69.2, 26.6};
  for (std::size_t k = 0; k < kNumPairs; ++k) CHECK(r.values[k] == doctest::Approx(genesis[k]).epsilon(0.002));
  CHECK(r.car_id == "Genesis");
}

TEST_CASE("shipped specs are valid and distinct") {
  const auto specs = default_car_specs();
  REQUIRE(specs.size() == 6);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    CHECK_NOTHROW(specs[i].validate());
    CHECK(specs[i].noise_sigma <= 0.05 * specs[i].base_force);
    for (std::size_t j = 0; j < i; ++j) CHECK(synth_ratings(specs[i]).values != synth_ratings(specs[j]).values);
  }
}

TEST_CASE("spec JSON round trip and errors") {
  for (const auto& s : default_car_specs()) {
    CHECK(SyntheticCarSpec::from_json(s.to_json()).to_json() == s.to_json());
  }
  auto doc = default_car_specs().front().to_json();
  doc["colour"] = "red";
  CHECK_THROWS_AS(SyntheticCarSpec::from_json(doc), ValidationError);
  auto nameless = default_car_specs().front().to_json();
  nameless.erase("name");
  CHECK_THROWS_AS(SyntheticCarSpec::from_json(nameless), ValidationError);

  auto bad = flat_spec(1.0);
  bad.noise_sigma = -1.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = flat_spec(1.0);
  bad.max_angle = 70.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = flat_spec(1.0);
  bad.detents.push_back({10.0, 0.0, 1.0});
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}
