// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <sstream>

#include <doctest.h>

#include "doorfeel/dataset.hpp"
#include "doorfeel/error.hpp"

using namespace doorfeel;

namespace {

NormalizedProfile profile(const std::string& car, const std::string& trial, double fill) {
  return {car, trial, std::vector<double>(kProfileLength, fill)};
}

std::filesystem::path fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("doorfeel_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("dataset round trip") {
  Dataset d;
  d.cars = {"A", "B"};
  d.profiles = {profile("A", "t0", 1.0), profile("A", "t1", 2.0), profile("B", "t0", 3.5)};
  const auto dir = fresh_dir("dataset");
  save_dataset(d, dir);
  const auto back = load_dataset(dir);
  CHECK(back.cars == d.cars);
  REQUIRE(back.profiles.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.profiles[i].car_id == d.profiles[i].car_id);
    CHECK(back.profiles[i].trial_id == d.profiles[i].trial_id);
    CHECK(back.profiles[i].values == d.profiles[i].values);
  }
  CHECK(back.profiles_for("A").size() == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("dataset validation") {
  Dataset dup;
  dup.cars = {"A"};
  dup.profiles = {profile("A", "t0", 1.0), profile("A", "t0", 1.0)};
  CHECK_THROWS_AS(dup.validate(), ValidationError);

  Dataset unlisted;
  unlisted.cars = {"A"};
  unlisted.profiles = {profile("A", "t0", 1.0), profile("B", "t0", 1.0)};
  CHECK_THROWS_AS(unlisted.validate(), ValidationError);

  Dataset empty_car;
  empty_car.cars = {"A", "B"};
  empty_car.profiles = {profile("A", "t0", 1.0)};
  CHECK_THROWS_AS(empty_car.validate(), ValidationError);

  CHECK_THROWS_AS(load_dataset(fresh_dir("missing")), ParseError);
}

TEST_CASE("join_ratings pairs recordings with their car's ratings") {
  Dataset d;
  d.cars = {"A", "B"};
  d.profiles = {profile("A", "t0", 1.0), profile("B", "t0", 2.0)};
  std::istringstream csv("car_id,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10\n"
                         "A,1,2,3,4,5,6,7,8,9,10\n"
                         "B,10,20,30,40,50,60,70,80,90,100\n"
                         "C,0,0,0,0,0,0,0,0,0,0\n");
  const auto table = parse_ratings_csv(csv);
  const auto joined = join_ratings(d, table);
  CHECK(joined.size() == 2);
  CHECK(joined.at("B").front().rating.values[9] == 100.0);

  std::istringstream partial("car_id,p1,p2,p3,p4,p5,p6,p7,p8,p9,p10\nA,1,2,3,4,5,6,7,8,9,10\n");
  CHECK_THROWS_AS(join_ratings(d, parse_ratings_csv(partial)), ValidationError);
}
