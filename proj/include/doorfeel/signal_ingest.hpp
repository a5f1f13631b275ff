// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <istream>
#include <vector>

#include <Eigen/Core>

namespace doorfeel {

struct ForceSample {
  double t;          // seconds
  Eigen::Vector3d f; // newtons
};

struct PositionSample {
  double t;          // seconds
  Eigen::Vector3d p; // meters
};

/// Force/torque sensor stream, nominally 1 kHz.
struct RawForceSeries {
  std::vector<ForceSample> samples;
  double nominal_rate = 1000.0;

  void validate() const;
};

/// Motion-capture marker stream, nominally 80 Hz.
struct RawPositionSeries {
  std::vector<PositionSample> samples;
  double nominal_rate = 80.0;

  void validate() const;
};

/// One-time capture of the hinge and the closed-door marker position.
struct HingeReference {
  Eigen::Vector3d hinge = Eigen::Vector3d::Zero();
  Eigen::Vector3d initial_marker = Eigen::Vector3d::UnitX();
  Eigen::Vector3d up_axis = Eigen::Vector3d::UnitZ();

  void validate() const;
};

struct SyncedSample {
  double t;         // seconds
  double force_mag; // newtons
  double angle;     // degrees
};

struct SynchronizedTrial {
  std::vector<SyncedSample> samples;

  void validate() const;
};

// CSV readers. Headers must be exactly `t,fx,fy,fz` / `t,px,py,pz`.
RawForceSeries parse_force_csv(std::istream& in);
RawForceSeries parse_force_csv(const std::filesystem::path& path);
RawPositionSeries parse_position_csv(std::istream& in);
RawPositionSeries parse_position_csv(const std::filesystem::path& path);

/// Reads `{"hinge": [..], "initial_marker": [..], "up_axis": [..]}`.
HingeReference parse_hinge_json(std::istream& in);
HingeReference parse_hinge_json(const std::filesystem::path& path);

/// Unsigned opening angle in degrees, [0, 180], measured in the plane normal
/// to `ref.up_axis` between (p - hinge) and (initial_marker - hinge).
double compute_angle(const Eigen::Vector3d& p, const HingeReference& ref);

/// Interpolates marker positions onto the force timestamps that fall inside
/// the common time range and converts each to (|f|, angle).
SynchronizedTrial synchronize(const RawForceSeries& force, const RawPositionSeries& position,
                              const HingeReference& ref);

}  // namespace doorfeel
