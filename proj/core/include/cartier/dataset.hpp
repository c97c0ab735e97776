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

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cartier/geometry.hpp"

namespace cartier {

/// Row-major float32 depth image, meters. Values <= 0 or NaN are invalid
/// sentinels and are preserved as-is by the loaders.
struct DepthImage {
  int width{0};
  int height{0};
  std::vector<float> data;  // size = width * height, top-left origin

  float at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
  float& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
  static bool is_valid(float z) { return std::isfinite(z) && z > 0.0f; }
};

/// One object-detector hit in one frame.
struct Detection {
  std::int64_t frame_id{0};
  std::string label;
  double confidence{0.0};
  PixelBBox bbox;
};

/// One exploration frame: pose, depth image, detector hits.
struct Frame {
  Pose pose;
  DepthImage depth;
  std::vector<Detection> detections;
};

/// The robot's exploration record. Frames are ordered by strictly
/// increasing frame_id; all depth images match the shared intrinsics.
struct Trajectory {
  Intrinsics intrinsics;
  std::vector<Frame> frames;
};

struct SceneObject {
  std::string instance_id;
  std::string label;
  AABB3 box;
};

/// Ground-truth object boxes for one scene.
struct SceneTruth {
  std::string scene_id;
  std::vector<SceneObject> objects;
};

enum class QueryType { Explicit, Implicit, Conversational };

std::string_view to_string(QueryType t);
QueryType query_type_from_string(std::string_view s);  // throws InvalidQueryType

struct Query {
  std::string query_id;
  QueryType type{QueryType::Explicit};
  std::string text;
  std::vector<std::string> plausible_labels;  // non-empty, validated against truth
};

// --- label normalization -------------------------------------------------
// Labels are compared case-insensitively and underscores/hyphens/spaces are
// treated as equivalent separators. This single rule is shared by the
// vocabulary, the indices, response parsing and the match metric.
std::string normalize_label(std::string_view label);

// --- depth file format ----------------------------------------------------
// `.cdpt`, bit-exact: magic "CDPT", u32 LE version = 1, u32 LE width,
// u32 LE height, then width*height float32 LE meters, row-major.
DepthImage read_depth(const std::filesystem::path& path);
void write_depth(const DepthImage& depth, const std::filesystem::path& path);

// --- trajectory directory layout -------------------------------------------
//   manifest.json     intrinsics, frame count, depth file pattern
//   poses.jsonl       one record per frame: frame_id, timestamp,
//                     position [x,y,z], quaternion [w,x,y,z]
//   detections.jsonl  frame_id, label, confidence, bbox [xmin,ymin,xmax,ymax]
//   depth/NNNNNN.cdpt one depth image per frame, named by frame_id
Trajectory load_trajectory(const std::filesystem::path& directory);
void save_trajectory(const Trajectory& trajectory, const std::filesystem::path& directory);

SceneTruth load_scene_truth(const std::filesystem::path& path);
void save_scene_truth(const SceneTruth& truth, const std::filesystem::path& path);

/// Loads queries and cross-validates every plausible label against `truth`.
std::vector<Query> load_queries(const std::filesystem::path& path, const SceneTruth& truth);
void save_queries(const std::vector<Query>& queries, const std::filesystem::path& path);

/// Unique detection labels above the confidence threshold (strict `>`),
/// in first-seen order across frames; labels first seen in the same frame
/// are ordered alphabetically. Dedup is by normalized label; the first-seen
/// original spelling is kept.
std::vector<std::string> detector_vocabulary(const Trajectory& trajectory,
                                             double confidence_threshold = 0.8);

}  // namespace cartier
