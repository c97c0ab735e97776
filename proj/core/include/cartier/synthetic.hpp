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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cartier/dataset.hpp"

namespace cartier {

/// Configuration for the analytic scene generator. Everything, including
/// the trajectory and the depth images, is a pure function of this struct.
struct SyntheticConfig {
  std::uint64_t seed{0};
  Vec3 room_extents{10.0, 8.0, 3.0};  // room spans [0, e] per axis, +Z up
  int object_count{10};
  double object_size_min{0.4};
  double object_size_max{1.2};
  int waypoint_count{20};
  double camera_height{1.5};
  double depth_noise_sigma{0.0};
  Intrinsics intrinsics{200.0, 200.0, 80.0, 60.0, 160, 120};

  void validate() const;  // throws InvalidArgument
};

struct SyntheticScene {
  Trajectory trajectory;
  SceneTruth truth;
  std::vector<Query> queries;
};

/// The 40 built-in household labels objects are drawn from.
const std::array<std::string, 40>& household_vocabulary();

/// Generates a scene of non-overlapping axis-aligned boxes inside a room
/// shell, a waypoint trajectory of axis-aligned camera headings at the
/// configured height, analytic depth images (constant front-plane depth per
/// object over its projected bounding box, room-shell depth elsewhere), and
/// one explicit query per placed object.
///
/// Detections are exact: a detection is emitted only when the object's
/// projected 8-corner bounding box is fully in front of the camera, its
/// center is inside the image and unoccluded, and every pixel of the bbox
/// belongs to that object's front face. Every valid pixel of an emitted
/// bbox therefore back-projects exactly onto the object's surface (before
/// depth noise).
///
/// Throws PlacementFailure when objects or camera vantages cannot be placed
/// within the bounded retry budget.
SyntheticScene generate_synthetic(const SyntheticConfig& config);

/// Renders one frame of a scene analytically: room-shell background depth,
/// per-object constant front-plane depth, and the exact detections emitted
/// for this pose. Exposed for tests; generate_synthetic uses it per frame.
/// The pose orientation must be one of the four axis-aligned headings
/// produced by axis_heading().
void render_synthetic_frame(const SceneTruth& truth, const Vec3& room_extents,
                            const Intrinsics& intr, Frame& frame);

/// Camera-to-world quaternion for a level camera looking along +X, +Y, -X
/// or -Y (heading = 0..3), with +Z up in the world.
Quat axis_heading(int heading);

}  // namespace cartier
