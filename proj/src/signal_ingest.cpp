// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include "doorfeel/signal_ingest.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Geometry>
#include <json.hpp>

#include "doorfeel/error.hpp"
#include "text_util.hpp"

namespace doorfeel {

namespace {

template <typename Sample>
void check_increasing(const std::vector<Sample>& samples, const char* what) {
  if (samples.size() < 2) {
    throw ValidationError(std::string(what) + ": at least 2 samples required, got " +
                          std::to_string(samples.size()));
  }
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) {
      throw ValidationError(std::string(what) + ": timestamps not strictly increasing at sample " +
                            std::to_string(i));
    }
  }
}

// Shared reader for the two 4-column stream formats.
template <typename Sample>
std::vector<Sample> read_xyz_csv(std::istream& in, std::string_view header) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<Sample> samples;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty()) continue;
    if (!have_header) {
      if (text != header) {
        throw ParseError("expected header '" + std::string(header) + "', got '" +
                         std::string(text) + "'",
                         line_no);
      }
      have_header = true;
      continue;
    }
    const auto fields = detail::split_csv(text);
    if (fields.size() != 4) {
      throw ParseError("expected 4 fields, got " + std::to_string(fields.size()), line_no);
    }
    std::array<double, 4> v{};
    for (std::size_t i = 0; i < 4; ++i) {
      v[i] = detail::parse_double(fields[i], line_no);
    }
    samples.push_back(Sample{v[0], Eigen::Vector3d(v[1], v[2], v[3])});
  }
  if (!have_header) throw ParseError("missing header '" + std::string(header) + "'");
  return samples;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

Eigen::Vector3d json_vec3(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key)) throw ParseError(std::string("hinge reference: missing key '") + key + "'");
  const auto& a = doc.at(key);
  if (!a.is_array() || a.size() != 3) {
    throw ParseError(std::string("hinge reference: '") + key + "' must be a 3-element array");
  }
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) {
    if (!a[i].is_number()) throw ParseError(std::string("hinge reference: '") + key + "' not numeric");
    v[i] = a[i].get<double>();
  }
  return v;
}

}  // namespace

void RawForceSeries::validate() const {
  if (!(nominal_rate > 0)) throw ValidationError("force series: nominal rate must be positive");
  check_increasing(samples, "force series");
}

void RawPositionSeries::validate() const {
  if (!(nominal_rate > 0)) throw ValidationError("position series: nominal rate must be positive");
  check_increasing(samples, "position series");
}

void HingeReference::validate() const {
  if (!((initial_marker - hinge).norm() > 0)) {
    throw ValidationError("hinge reference: initial marker coincides with hinge");
  }
  if (std::abs(up_axis.norm() - 1.0) > 1e-9) {
    throw ValidationError("hinge reference: up_axis must be a unit vector");
  }
}

void SynchronizedTrial::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (i > 0 && !(s.t > samples[i - 1].t)) {
      throw ValidationError("synchronized trial: timestamps not strictly increasing");
    }
    if (!(s.angle >= 0.0 && s.angle < 360.0)) {
      throw ValidationError("synchronized trial: angle out of [0, 360)");
    }
    if (!(s.force_mag >= 0.0) || !std::isfinite(s.force_mag)) {
      throw ValidationError("synchronized trial: force magnitude must be finite and >= 0");
    }
  }
}

RawForceSeries parse_force_csv(std::istream& in) {
  RawForceSeries series;
  series.samples = read_xyz_csv<ForceSample>(in, "t,fx,fy,fz");
  if (series.samples.empty()) throw ValidationError("force series: empty body");
  series.validate();
  return series;
}

RawForceSeries parse_force_csv(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_force_csv(in);
}

RawPositionSeries parse_position_csv(std::istream& in) {
  RawPositionSeries series;
  series.samples = read_xyz_csv<PositionSample>(in, "t,px,py,pz");
  if (series.samples.empty()) throw ValidationError("position series: empty body");
  series.validate();
  return series;
}

RawPositionSeries parse_position_csv(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_position_csv(in);
}

HingeReference parse_hinge_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("hinge reference: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("hinge reference: expected a JSON object");
  HingeReference ref;
  ref.hinge = json_vec3(doc, "hinge");
  ref.initial_marker = json_vec3(doc, "initial_marker");
  ref.up_axis = json_vec3(doc, "up_axis");
  ref.validate();
  return ref;
}

HingeReference parse_hinge_json(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return parse_hinge_json(in);
}

double compute_angle(const Eigen::Vector3d& p, const HingeReference& ref) {
  const Eigen::Vector3d& n = ref.up_axis;
  Eigen::Vector3d u = p - ref.hinge;
  Eigen::Vector3d v = ref.initial_marker - ref.hinge;
  u -= u.dot(n) * n;
  v -= v.dot(n) * n;
  constexpr double kTiny = 1e-12;
  if (u.norm() <= kTiny) throw GeometryError("marker projects onto the hinge axis");
  if (v.norm() <= kTiny) throw GeometryError("initial marker projects onto the hinge axis");
  // atan2 keeps full precision near 0 and 180 degrees where acos does not.
  const double rad = std::atan2(u.cross(v).norm(), u.dot(v));
  return rad * 180.0 / std::numbers::pi;
}

SynchronizedTrial synchronize(const RawForceSeries& force, const RawPositionSeries& position,
                              const HingeReference& ref) {
  force.validate();
  position.validate();
  ref.validate();

  const auto& fs = force.samples;
  const auto& ps = position.samples;
  const double t_begin = std::max(fs.front().t, ps.front().t);
  const double t_end = std::min(fs.back().t, ps.back().t);
  if (t_begin > t_end) throw SyncError("force and position streams do not overlap in time");

  SynchronizedTrial out;
  std::size_t k = 0;  // ps[k].t <= t < ps[k+1].t
  for (const auto& s : fs) {
    if (s.t < t_begin || s.t > t_end) continue;
    while (k + 1 < ps.size() && ps[k + 1].t <= s.t) ++k;
    Eigen::Vector3d p;
    if (k + 1 == ps.size()) {
      p = ps[k].p;
    } else {
      const double alpha = (s.t - ps[k].t) / (ps[k + 1].t - ps[k].t);
      p = ps[k].p + alpha * (ps[k + 1].p - ps[k].p);
    }
    out.samples.push_back(SyncedSample{s.t, s.f.norm(), compute_angle(p, ref)});
  }
  if (out.samples.empty()) throw SyncError("no force samples inside the overlapping time range");
  return out;
}

}  // namespace doorfeel
