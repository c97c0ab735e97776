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

#include "cartier/geometry.hpp"

#include <cmath>
#include <string>

namespace cartier {

namespace {

constexpr double kQuatNormTolerance = 1e-3;

Quat checked_unit_quaternion(const Pose& pose) {
  const double norm = pose.orientation.norm();
  if (std::abs(norm - 1.0) > kQuatNormTolerance) {
    throw Error(Errc::UnnormalizedQuaternion,
                "pose quaternion norm " + std::to_string(norm) + " for frame " +
                    std::to_string(pose.frame_id));
  }
  return pose.orientation.normalized();
}

}  // namespace

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::NonPositiveDepth: return "NonPositiveDepth";
    case Errc::PixelOutOfBounds: return "PixelOutOfBounds";
    case Errc::UnnormalizedQuaternion: return "UnnormalizedQuaternion";
    case Errc::MissingFile: return "MissingFile";
    case Errc::ManifestMismatch: return "ManifestMismatch";
    case Errc::MalformedRecord: return "MalformedRecord";
    case Errc::UnknownPlausibleLabel: return "UnknownPlausibleLabel";
    case Errc::InvalidQueryType: return "InvalidQueryType";
    case Errc::PlacementFailure: return "PlacementFailure";
    case Errc::NoValidDepth: return "NoValidDepth";
    case Errc::EmbedderLacksPixelCapability: return "EmbedderLacksPixelCapability";
    case Errc::EmbedderMismatch: return "EmbedderMismatch";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::LabelNotIndexed: return "LabelNotIndexed";
    case Errc::EmptyVocabulary: return "EmptyVocabulary";
    case Errc::EmptyQuery: return "EmptyQuery";
    case Errc::NetworkError: return "NetworkError";
    case Errc::RateLimited: return "RateLimited";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::CacheMiss: return "CacheMiss";
    case Errc::NoMatch: return "NoMatch";
    case Errc::NoSurvivingProposals: return "NoSurvivingProposals";
    case Errc::InvalidArgument: return "InvalidArgument";
  }
  return "UnknownError";
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(Errc::InvalidArgument, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    throw Error(Errc::InvalidArgument, "principal point outside the image");
  }
}

CameraPoint backproject(double u, double v, double z, const Intrinsics& intr) {
  if (!(z > 0.0)) {
    throw Error(Errc::NonPositiveDepth, "depth " + std::to_string(z));
  }
  if (u < 0.0 || u >= intr.width || v < 0.0 || v >= intr.height) {
    throw Error(Errc::PixelOutOfBounds,
                "pixel (" + std::to_string(u) + ", " + std::to_string(v) + ")");
  }
  return CameraPoint{Vec3((u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z)};
}

std::pair<double, double> project(const CameraPoint& p, const Intrinsics& intr) {
  if (!(p.p.z() > 0.0)) {
    throw Error(Errc::NonPositiveDepth, "camera point behind the image plane");
  }
  return {intr.cx + intr.fx * p.p.x() / p.p.z(), intr.cy + intr.fy * p.p.y() / p.p.z()};
}

WorldPoint camera_to_world(const CameraPoint& p, const Pose& pose) {
  const Quat q = checked_unit_quaternion(pose);
  return WorldPoint{q * p.p + pose.position};
}

CameraPoint world_to_camera(const WorldPoint& p, const Pose& pose) {
  const Quat q = checked_unit_quaternion(pose);
  return CameraPoint{q.conjugate() * (p.p - pose.position)};
}

double point_to_aabb_distance(const WorldPoint& p, const AABB3& box) {
  double sq = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double below = box.min[i] - p.p[i];
    const double above = p.p[i] - box.max[i];
    const double gap = std::max(std::max(below, above), 0.0);
    sq += gap * gap;
  }
  return std::sqrt(sq);
}

double bbox_view_angle(const PixelBBox& b, const Intrinsics& intr) {
  const double tan_u = (b.center_u() - intr.cx) / intr.fx;
  const double tan_v = (b.center_v() - intr.cy) / intr.fy;
  return std::atan(std::sqrt(tan_u * tan_u + tan_v * tan_v));
}

}  // namespace cartier
