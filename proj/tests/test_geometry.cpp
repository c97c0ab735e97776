// Copyright 2026 The CARTIER Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include "cartier/geometry.hpp"
#include "support/test_util.hpp"

using namespace cartier;
using cartier::testing::TestRng;
using cartier::testing::thrown_code;

namespace {

const Intrinsics kIntr{100.0, 100.0, 50.0, 50.0, 640, 480};

}  // namespace

TEST_SUITE("geometry") {

TEST_CASE("backproject principal point ray") {
  const CameraPoint p = backproject(50.0, 50.0, 2.0, kIntr);
  CHECK(p.p.x() == doctest::Approx(0.0));
  CHECK(p.p.y() == doctest::Approx(0.0));
  CHECK(p.p.z() == doctest::Approx(2.0));
}

TEST_CASE("backproject similar triangles") {
  const CameraPoint p = backproject(150.0, 50.0, 2.0, kIntr);
  CHECK(p.p.x() == doctest::Approx(2.0));
  CHECK(p.p.y() == doctest::Approx(0.0));
  CHECK(p.p.z() == doctest::Approx(2.0));
}

TEST_CASE("backproject rejects bad inputs") {
  CHECK(thrown_code([] { backproject(50, 50, 0.0, kIntr); }) == Errc::NonPositiveDepth);
  CHECK(thrown_code([] { backproject(50, 50, -1.0, kIntr); }) == Errc::NonPositiveDepth);
  CHECK(thrown_code([] { backproject(-1, 50, 2.0, kIntr); }) == Errc::PixelOutOfBounds);
  CHECK(thrown_code([] { backproject(50, 480, 2.0, kIntr); }) == Errc::PixelOutOfBounds);
}

TEST_CASE("backproject is homogeneous in depth") {
  TestRng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double u = rng.uniform(0.0, 639.0);
    const double v = rng.uniform(0.0, 479.0);
    const double z = rng.uniform(0.1, 20.0);
    const double alpha = rng.uniform(0.1, 4.0);
    const CameraPoint a = backproject(u, v, alpha * z, kIntr);
    const CameraPoint b = backproject(u, v, z, kIntr);
    CHECK((a.p - alpha * b.p).norm() < 1e-12 * a.p.norm());
  }
}

TEST_CASE("project inverts backproject") {
  TestRng rng(12);
  for (int i = 0; i < 200; ++i) {
    const double u = rng.uniform(0.0, 639.0);
    const double v = rng.uniform(0.0, 479.0);
    const double z = rng.uniform(0.1, 40.0);
    const auto [pu, pv] = project(backproject(u, v, z, kIntr), kIntr);
    CHECK(std::abs(pu - u) < 1e-9);
    CHECK(std::abs(pv - v) < 1e-9);
  }
}

TEST_CASE("camera_to_world pure translation") {
  Pose pose;
  pose.position = Vec3(1, 1, 1);
  const WorldPoint w = camera_to_world(CameraPoint{Vec3(0, 0, 2)}, pose);
  CHECK((w.p - Vec3(1, 1, 3)).norm() < 1e-15);
}

TEST_CASE("camera_to_world 180 degree yaw about +Y") {
  Pose pose;
  pose.orientation = Quat(0, 0, 1, 0);  // (w, x, y, z)
  const WorldPoint w = camera_to_world(CameraPoint{Vec3(0, 0, 2)}, pose);
  CHECK((w.p - Vec3(0, 0, -2)).norm() < 1e-12);
}

TEST_CASE("camera/world round trip") {
  TestRng rng(13);
  for (int i = 0; i < 300; ++i) {
    Pose pose;
    pose.position = rng.vec3(-10, 10);
    pose.orientation = rng.unit_quaternion();
    const CameraPoint p{rng.vec3(-20, 20)};
    const CameraPoint back = world_to_camera(camera_to_world(p, pose), pose);
    CHECK((back.p - p.p).norm() < 1e-9);
  }
}

TEST_CASE("camera_to_world preserves distances") {
  TestRng rng(14);
  for (int i = 0; i < 200; ++i) {
    Pose pose;
    pose.position = rng.vec3(-10, 10);
    pose.orientation = rng.unit_quaternion();
    const CameraPoint p{rng.vec3(-20, 20)};
    const CameraPoint q{rng.vec3(-20, 20)};
    const double before = (p.p - q.p).norm();
    const double after = (camera_to_world(p, pose).p - camera_to_world(q, pose).p).norm();
    CHECK(std::abs(before - after) < 1e-9);
  }
}

TEST_CASE("unnormalized quaternions are rejected beyond tolerance") {
  Pose pose;
  pose.orientation = Quat(2, 0, 0, 0);
  CHECK(thrown_code([&] { camera_to_world(CameraPoint{Vec3(1, 2, 3)}, pose); }) ==
        Errc::UnnormalizedQuaternion);

  // Float-rounded quaternions are renormalized, not rejected.
  pose.orientation = Quat(1.0 + 1e-4, 0, 0, 0);
  const WorldPoint w = camera_to_world(CameraPoint{Vec3(1, 2, 3)}, pose);
  CHECK((w.p - Vec3(1, 2, 3)).norm() < 1e-9);
}

TEST_CASE("point_to_aabb_distance pinned cases") {
  const AABB3 unit{Vec3(0, 0, 0), Vec3(1, 1, 1)};
  CHECK(point_to_aabb_distance(WorldPoint{Vec3(0.5, 0.5, 0.5)}, unit) == 0.0);
  CHECK(point_to_aabb_distance(WorldPoint{Vec3(3, 0.5, 0.5)}, unit) == doctest::Approx(2.0));
  CHECK(point_to_aabb_distance(WorldPoint{Vec3(2, 2, 2)}, unit) ==
        doctest::Approx(std::sqrt(3.0)));

  // a zero-extent box degenerates to point-to-point distance
  const AABB3 degenerate{Vec3(1, 1, 1), Vec3(1, 1, 1)};
  CHECK(point_to_aabb_distance(WorldPoint{Vec3(1, 1, 1)}, degenerate) == 0.0);
  CHECK(point_to_aabb_distance(WorldPoint{Vec3(4, 5, 1)}, degenerate) == doctest::Approx(5.0));
}

TEST_CASE("distance is zero exactly on containment") {
  TestRng rng(15);
  for (int i = 0; i < 300; ++i) {
    const AABB3 box = rng.aabb();
    Vec3 inside;
    for (int k = 0; k < 3; ++k) {
      inside[k] = rng.uniform(box.min[k], box.max[k]);
    }
    CHECK(point_to_aabb_distance(WorldPoint{inside}, box) == 0.0);

    const Vec3 p = rng.vec3(-12, 12);
    const double d = point_to_aabb_distance(WorldPoint{p}, box);
    CHECK((d == 0.0) == box.contains(p));
  }
}

TEST_CASE("distance is 1-Lipschitz") {
  TestRng rng(16);
  for (int i = 0; i < 300; ++i) {
    const AABB3 box = rng.aabb();
    const Vec3 p = rng.vec3(-12, 12);
    const Vec3 q = rng.vec3(-12, 12);
    const double dp = point_to_aabb_distance(WorldPoint{p}, box);
    const double dq = point_to_aabb_distance(WorldPoint{q}, box);
    CHECK(std::abs(dp - dq) <= (p - q).norm() + 1e-12);
  }
}

TEST_CASE("distance agrees with surface sampling oracle") {
  TestRng rng(17);
  for (int i = 0; i < 200; ++i) {
    const AABB3 box = rng.aabb();
    const WorldPoint p{rng.vec3(-12, 12)};
    const double expected = cartier::testing::surface_sampling_distance(p, box);
    CHECK(std::abs(point_to_aabb_distance(p, box) - expected) < 1e-6);
  }
}

TEST_CASE("bbox_view_angle pinned cases") {
  const PixelBBox centered{40, 40, 60, 60};  // center exactly on the principal point
  CHECK(bbox_view_angle(centered, kIntr) == doctest::Approx(0.0));

  // center at (cx + fx, cy): unit tangent
  const PixelBBox off_axis{kIntr.cx + kIntr.fx - 5, 45, kIntr.cx + kIntr.fx + 5, 55};
  CHECK(bbox_view_angle(off_axis, kIntr) == doctest::Approx(M_PI / 4));
}

TEST_CASE("bbox_view_angle matches the explicit ray angle") {
  TestRng rng(18);
  for (int i = 0; i < 200; ++i) {
    const double x0 = rng.uniform(0, 600);
    const double y0 = rng.uniform(0, 440);
    const PixelBBox b{x0, y0, x0 + rng.uniform(1, 39), y0 + rng.uniform(1, 39)};
    const Vec3 ray((b.center_u() - kIntr.cx) / kIntr.fx, (b.center_v() - kIntr.cy) / kIntr.fy,
                   1.0);
    const double expected = std::acos(ray.z() / ray.norm());
    CHECK(std::abs(bbox_view_angle(b, kIntr) - expected) < 1e-9);
  }
}

TEST_CASE("intrinsics validation") {
  CHECK(thrown_code([] { Intrinsics{0, 100, 50, 50, 640, 480}.validate(); }) ==
        Errc::InvalidArgument);
  CHECK(thrown_code([] { Intrinsics{100, 100, 700, 50, 640, 480}.validate(); }) ==
        Errc::InvalidArgument);
  CHECK(!thrown_code([] { kIntr.validate(); }));
}

}  // TEST_SUITE
