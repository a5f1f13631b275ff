// Copyright 2026 The doorfeel Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <doctest.h>

#include "doorfeel/error.hpp"
#include "doorfeel/signal_ingest.hpp"

#include <Eigen/Geometry>

using namespace doorfeel;
using Eigen::Vector3d;

namespace {

HingeReference unit_ref() {
  HingeReference ref;
  ref.hinge = Vector3d::Zero();
  ref.initial_marker = Vector3d::UnitX();
  ref.up_axis = Vector3d::UnitZ();
  return ref;
}

// Reference angle: arccos of the normalized dot product of the xy components.
double arccos_angle(const Vector3d& a, const Vector3d& b) {
  const double ax = a.x(), ay = a.y(), bx = b.x(), by = b.y();
  double c = (ax * bx + ay * by) / (std::hypot(ax, ay) * std::hypot(bx, by));
  c = std::clamp(c, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

}  // namespace

TEST_CASE("force csv rows are echoed") {
  std::istringstream in("t,fx,fy,fz\n0.0,1,2,3\n0.001,4,5,6\n0.002,-1,0.5,2e-3\n");
  const auto s = parse_force_csv(in);
  REQUIRE(s.samples.size() == 3);
  CHECK(s.samples[1].t == 0.001);
  CHECK(s.samples[1].f == Vector3d(4, 5, 6));
  CHECK(s.samples[2].f.z() == 2e-3);
}

TEST_CASE("force csv rejects repeated timestamps and empty bodies") {
  std::istringstream repeated("t,fx,fy,fz\n0.0,1,2,3\n0.0,1,2,3\n");
  CHECK_THROWS_AS(parse_force_csv(repeated), ValidationError);
  std::istringstream header_only("t,fx,fy,fz\n");
  CHECK_THROWS_AS(parse_force_csv(header_only), ValidationError);
}

TEST_CASE("position csv") {
  std::istringstream ok("t,px,py,pz\n0,0,0,0\n0.0125,1,0,0\n0.025,1,1,0\n");
  CHECK(parse_position_csv(ok).samples.size() == 3);

  std::istringstream missing("t,px,py,pz\n0,0,0\n");
  CHECK_THROWS_AS(parse_position_csv(missing), ParseError);

  std::istringstream backwards("t,px,py,pz\n0.5,0,0,0\n0.25,1,0,0\n");
  CHECK_THROWS_AS(parse_position_csv(backwards), ValidationError);
}

TEST_CASE("parse errors carry the line number") {
  std::istringstream bad("t,fx,fy,fz\n0,1,2,3\n0.1,x,2,3\n");
  try {
    parse_force_csv(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("hinge json") {
  std::istringstream in(R"({"hinge":[1,2,0],"initial_marker":[2,2,0],"up_axis":[0,0,1]})");
  const auto ref = parse_hinge_json(in);
  CHECK(ref.hinge == Vector3d(1, 2, 0));
  std::istringstream missing(R"({"hinge":[1,2,0],"up_axis":[0,0,1]})");
  CHECK_THROWS_AS(parse_hinge_json(missing), ParseError);
}

TEST_CASE("compute_angle examples") {
  const auto ref = unit_ref();
  CHECK(compute_angle(Vector3d(1, 0, 0), ref) == doctest::Approx(0.0));
  CHECK(compute_angle(Vector3d(0, 1, 0), ref) == doctest::Approx(90.0));
  CHECK(compute_angle(Vector3d(1, 1, 0) / std::sqrt(2.0), ref) == doctest::Approx(45.0));
  CHECK_THROWS_AS(compute_angle(Vector3d(0, 0, 3), ref), GeometryError);
}

TEST_CASE("compute_angle matches arccos oracle and is rotation and scale invariant") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 200; ++trial) {
    HingeReference ref = unit_ref();
    ref.hinge = Vector3d(u(rng), u(rng), u(rng));
    ref.initial_marker = ref.hinge + Vector3d(u(rng), u(rng), u(rng));
    const Vector3d p = ref.hinge + Vector3d(u(rng), u(rng), u(rng));
    const double a = compute_angle(p, ref);
    CHECK(a == doctest::Approx(arccos_angle(p - ref.hinge, ref.initial_marker - ref.hinge)).epsilon(1e-9));

    const double theta = u(rng);
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(theta, Vector3d::UnitZ()).toRotationMatrix();
    HingeReference rotated = ref;
    rotated.hinge = rot * ref.hinge;
    rotated.initial_marker = rot * ref.initial_marker;
    CHECK(compute_angle(rot * p, rotated) == doctest::Approx(a).epsilon(1e-9));

    const double k = 0.1 + std::abs(u(rng));
    CHECK(compute_angle(ref.hinge + k * (p - ref.hinge), ref) == doctest::Approx(a).epsilon(1e-9));
  }
}

TEST_CASE("synchronize interpolates and takes the force norm") {
  const auto ref = unit_ref();
  const double one_deg = std::numbers::pi / 180.0;
  RawPositionSeries pos;
  pos.samples = {{0.0, Vector3d(1, 0, 0)}, {0.0125, Vector3d(std::cos(one_deg), std::sin(one_deg), 0)}};
  RawForceSeries force;
  force.samples = {{0.0, Vector3d(3, 4, 0)}, {0.00625, Vector3d(0, 0, 2)}, {0.0125, Vector3d(1, 0, 0)}};
  const auto trial = synchronize(force, pos, ref);
  REQUIRE(trial.samples.size() == 3);
  CHECK(trial.samples[0].force_mag == doctest::Approx(5.0));
  // The chord midpoint lies on the bisector.
  CHECK(trial.samples[1].angle == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(trial.samples[2].angle == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("synchronize constant position keeps every force sample") {
  RawPositionSeries pos;
  pos.samples = {{0.0, Vector3d(0, 1, 0)}, {1.0, Vector3d(0, 1, 0)}};
  RawForceSeries force;
  for (int i = 0; i <= 100; ++i) force.samples.push_back({i * 0.01, Vector3d(i, 0, 0)});
  const auto trial = synchronize(force, pos, unit_ref());
  REQUIRE(trial.samples.size() == 101);
  for (std::size_t i = 0; i < trial.samples.size(); ++i) {
    CHECK(trial.samples[i].angle == doctest::Approx(90.0));
    CHECK(trial.samples[i].force_mag == doctest::Approx(static_cast<double>(i)));
  }
}

TEST_CASE("synchronize keeps only the overlapping window and hits knots exactly") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto ref = unit_ref();
  for (int trial = 0; trial < 50; ++trial) {
    RawPositionSeries pos;
    double t = 0.2 * u(rng);
    for (int i = 0; i < 40; ++i) {
      const double a = i * 0.02 + 0.01 * u(rng);
      pos.samples.push_back({t, Vector3d(std::cos(a), std::sin(a), u(rng))});
      t += 0.0125;
    }
    RawForceSeries force;
    // Force timestamps include every position timestamp plus 1 kHz samples.
    std::vector<double> ts;
    for (double tf = 0.0; tf < 0.7; tf += 0.001) ts.push_back(tf);
    for (const auto& p : pos.samples) ts.push_back(p.t);
    std::sort(ts.begin(), ts.end());
    ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
    for (double tf : ts) force.samples.push_back({tf, Vector3d(u(rng), u(rng), u(rng))});

    const auto synced = synchronize(force, pos, ref);
    const double lo = std::max(force.samples.front().t, pos.samples.front().t);
    const double hi = std::min(force.samples.back().t, pos.samples.back().t);
    const auto expected = std::count_if(ts.begin(), ts.end(), [&](double x) { return x >= lo && x <= hi; });
    CHECK(synced.samples.size() == static_cast<std::size_t>(expected));
    for (const auto& p : pos.samples) {
      const auto it = std::find_if(synced.samples.begin(), synced.samples.end(),
                                   [&](const SyncedSample& s) { return s.t == p.t; });
      REQUIRE(it != synced.samples.end());
      CHECK(it->angle == compute_angle(p.p, ref));
    }
  }
}

TEST_CASE("synchronize without overlap") {
  RawPositionSeries pos;
  pos.samples = {{0.0, Vector3d(1, 0, 0)}, {1.0, Vector3d(0, 1, 0)}};
  RawForceSeries force;
  force.samples = {{2.0, Vector3d(1, 0, 0)}, {3.0, Vector3d(1, 0, 0)}};
  CHECK_THROWS_AS(synchronize(force, pos, unit_ref()), SyncError);
}
