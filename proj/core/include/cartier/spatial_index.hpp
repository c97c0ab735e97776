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
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cartier/dataset.hpp"
#include "cartier/embedder.hpp"

namespace cartier {

/// One spatial-language-index answer: a label anchored to a world point.
struct IndexEntry {
  std::string label;
  WorldPoint point;
  std::int64_t source_frame{-1};
  double score{0.0};  // bbox area in px^2 for object indices, cosine for grids
};

enum class ObjectIndexVariant { ObjectDepth, ObjectViewpoint };

std::string_view to_string(ObjectIndexVariant v);
ObjectIndexVariant object_index_variant_from_string(std::string_view s);

/// Label-keyed index with one entry per (normalized) label, anchored to the
/// single best observation frame of that object.
struct ObjectIndex {
  ObjectIndexVariant variant{ObjectIndexVariant::ObjectDepth};
  double confidence_threshold{0.8};
  bool compensate{false};  // viewpoint variant only
  std::map<std::string, IndexEntry> entries;  // key = normalize_label(label)
};

/// For every vocabulary label, picks the above-threshold detection with the
/// largest raw bbox area, back-projects every valid depth pixel inside that
/// bbox and stores the mean of the world points. Falls back to the
/// next-largest bbox when the chosen one contains no valid depth; throws
/// NoValidDepth when no detection of a label has any.
ObjectIndex build_object_depth(const Trajectory& trajectory, double confidence_threshold = 0.8);

/// For every vocabulary label, stores the camera position of the frame
/// whose detection maximizes bbox area, optionally compensated for
/// perspective by cos^3 of the view angle (off-axis patches project
/// enlarged by roughly the inverse factor).
ObjectIndex build_object_viewpoint(const Trajectory& trajectory,
                                   double confidence_threshold = 0.8, bool compensate = false);

/// Compensated selection score used by the viewpoint index.
double compensated_area(double area, double view_angle);

/// Top-down 2-D grid of averaged pixel embeddings.
struct EmbeddingGrid {
  double cell_size{0.1};
  double origin_x{0.0};
  double origin_y{0.0};
  int rows{0};
  int cols{0};
  int dimension{0};
  std::string embedder_tag;
  std::vector<int> dropped_dims;
  std::vector<double> means;         // rows*cols*dimension, row-major cells
  std::vector<std::int64_t> counts;  // rows*cols
  std::vector<double> mean_heights;  // rows*cols, world Z mean of contributors

  std::size_t cell_index(int row, int col) const {
    return static_cast<std::size_t>(row) * cols + col;
  }
};

/// Back-projects every valid depth pixel, drops it onto the top-down cell
/// containing its world (x, y), and accumulates the running mean of the
/// per-pixel embeddings. Cell embeddings are renormalized at query time.
EmbeddingGrid accumulate_grid(const Trajectory& trajectory, const Embedder& embedder,
                              double cell_size = 0.1, std::vector<int> dropped_dims = {});

/// Embeds the text, zeroes the configured dropped dimensions on both sides,
/// renormalizes, and returns the argmax-cosine cell (ties broken by lowest
/// (row, col)). The returned point is the cell center at the mean height of
/// the cell's contributing pixels.
IndexEntry query_grid(const EmbeddingGrid& grid, std::string_view text, const Embedder& embedder);

/// Exact label lookup (case-insensitive); throws LabelNotIndexed.
const IndexEntry& lookup(const ObjectIndex& index, std::string_view label);
/// Grid lookup; delegates to query_grid.
WorldPoint lookup(const EmbeddingGrid& grid, std::string_view text, const Embedder& embedder);

// Serialization. Object indices are a single JSON file; grids are a JSON
// manifest plus a raw float32 little-endian blob of cell embeddings
// (row-major cells, `dimension` floats per cell) next to it.
void save_object_index(const ObjectIndex& index, const std::filesystem::path& path);
ObjectIndex load_object_index(const std::filesystem::path& path);
void save_grid(const EmbeddingGrid& grid, const std::filesystem::path& manifest_path);
EmbeddingGrid load_grid(const std::filesystem::path& manifest_path);

}  // namespace cartier
