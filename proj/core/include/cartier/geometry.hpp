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

#pragma once

#include <cstdint>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "cartier/error.hpp"

// Coordinate conventions, shared by every module:
//   camera frame: +Z along the optical axis, +X right, +Y down (pinhole).
//   world frame:  right-handed, +Z up; arbitrary origin, consistent per
//                 trajectory.
// All positions are in meters, all pixel quantities in pixels.

namespace cartier {

using Vec3 = Eigen::Vector3d;
using Quat = Eigen::Quaterniond;

/// Pinhole camera intrinsics. No distortion model.
struct Intrinsics {
  double fx{0.0};
  double fy{0.0};
  double cx{0.0};
  double cy{0.0};
  int width{0};
  int height{0};

  /// Throws InvalidArgument when fx/fy are not positive or the principal
  /// point falls outside the image.
  void validate() const;
};

/// A point expressed in the camera frame of some pose.
struct CameraPoint {
  Vec3 p{Vec3::Zero()};
};

/// A point expressed in the world frame.
struct WorldPoint {
  Vec3 p{Vec3::Zero()};
};

/// Camera pose: `orientation` rotates camera-frame vectors into the world
/// frame, `position` is the camera center in world coordinates.
struct Pose {
  Vec3 position{Vec3::Zero()};
  Quat orientation{Quat::Identity()};  // stored (w, x, y, z)
  std::int64_t frame_id{0};
  double timestamp{0.0};
};

/// Pixel-space bounding box, half-open: [xmin, xmax) x [ymin, ymax).
struct PixelBBox {
  double xmin{0.0};
  double ymin{0.0};
  double xmax{0.0};
  double ymax{0.0};

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  double center_u() const { return 0.5 * (xmin + xmax); }
  double center_v() const { return 0.5 * (ymin + ymax); }
  bool contains(double u, double v) const {
    return u >= xmin && u < xmax && v >= ymin && v < ymax;
  }
};

/// Axis-aligned box in the world frame, min <= max component-wise.
struct AABB3 {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Zero()};

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extents() const { return max - min; }
  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  bool intersects(const AABB3& other) const {
    return (min.array() <= other.max.array()).all() &&
           (max.array() >= other.min.array()).all();
  }
};

/// Inverse pinhole projection of pixel (u, v) at depth z (camera-frame Z).
/// Throws NonPositiveDepth for z <= 0 and PixelOutOfBounds when (u, v) lies
/// outside [0, width) x [0, height).
CameraPoint backproject(double u, double v, double z, const Intrinsics& intr);

/// Forward pinhole projection; pre: p.z > 0. Returns (u, v); the caller is
/// responsible for bounds checks.
std::pair<double, double> project(const CameraPoint& p, const Intrinsics& intr);

/// Rigid transform camera -> world. Throws UnnormalizedQuaternion when the
/// pose quaternion norm deviates from 1 by more than 1e-3; smaller
/// deviations are renormalized.
WorldPoint camera_to_world(const CameraPoint& p, const Pose& pose);

/// Inverse of camera_to_world.
CameraPoint world_to_camera(const WorldPoint& p, const Pose& pose);

/// Euclidean distance from p to the closest point of the box; 0 when p is
/// inside or on the box.
double point_to_aabb_distance(const WorldPoint& p, const AABB3& box);

/// Angle between the optical axis and the ray through the bbox center.
double bbox_view_angle(const PixelBBox& b, const Intrinsics& intr);

}  // namespace cartier
