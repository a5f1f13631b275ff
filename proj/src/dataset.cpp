// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include "doorfeel/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "doorfeel/error.hpp"

namespace doorfeel {

namespace fs = std::filesystem;

std::vector<NormalizedProfile> Dataset::profiles_for(const std::string& car) const {
  std::vector<NormalizedProfile> out;
  for (const auto& p : profiles) {
    if (p.car_id == car) out.push_back(p);
  }
  return out;
}

void Dataset::validate() const {
  std::set<std::string> known;
  for (const auto& c : cars) {
    if (c.empty()) throw ValidationError("dataset: empty car id");
    if (!known.insert(c).second) throw ValidationError("dataset: duplicate car '" + c + "'");
  }
  std::set<std::pair<std::string, std::string>> ids;
  std::set<std::string> used;
  for (const auto& p : profiles) {
    p.validate();
    if (!known.contains(p.car_id)) {
      throw ValidationError("dataset: profile for unlisted car '" + p.car_id + "'");
    }
    if (!ids.emplace(p.car_id, p.trial_id).second) {
      throw ValidationError("dataset: duplicate recording " + p.car_id + "/" + p.trial_id);
    }
    used.insert(p.car_id);
  }
  for (const auto& c : cars) {
    if (!used.contains(c)) throw ValidationError("dataset: car '" + c + "' has no recordings");
  }
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw ParseError("cannot open " + manifest_path.string());
  Dataset ds;
  try {
    const auto doc = nlohmann::json::parse(in);
    ds.cars = doc.at("cars").get<std::vector<std::string>>();
    for (const auto& entry : doc.at("profiles")) {
      const auto file = entry.at("file").get<std::string>();
      NormalizedProfile p = load_profile(dir / file);
      const auto car = entry.at("car_id").get<std::string>();
      const auto trial = entry.at("trial_id").get<std::string>();
      if (p.car_id != car || p.trial_id != trial) {
        throw ValidationError("dataset: " + file + " holds " + p.car_id + "/" + p.trial_id +
                              " but the manifest says " + car + "/" + trial);
      }
      ds.profiles.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const fs::path& dir) {
  dataset.validate();
  fs::create_directories(dir / "profiles");
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& p : dataset.profiles) {
    const std::string file = "profiles/" + p.car_id + "_" + p.trial_id + ".json";
    save_profile(p, dir / file);
    entries.push_back({{"car_id", p.car_id}, {"trial_id", p.trial_id}, {"file", file}});
  }
  const nlohmann::json doc = {{"cars", dataset.cars}, {"profiles", entries}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << doc.dump(2) << '\n';
}

ExamplesByCar join_ratings(const Dataset& dataset, const RatingsTable& ratings) {
  ExamplesByCar out;
  for (const auto& car : dataset.cars) {
    const auto it = ratings.by_car.find(car);
    if (it == ratings.by_car.end()) {
      throw ValidationError("ratings: no rating row for car '" + car + "'");
    }
    auto& group = out[car];
    for (auto& p : dataset.profiles_for(car)) group.push_back({std::move(p), it->second});
    if (group.empty()) throw ValidationError("dataset: car '" + car + "' has no recordings");
  }
  return out;
}

}  // namespace doorfeel
