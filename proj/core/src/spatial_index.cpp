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

#include "cartier/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace cartier {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Candidate {
  std::size_t frame_index;
  std::size_t detection_index;
  double area;
};

// Candidates per normalized label, above the confidence threshold, in
// (frame, detection) order.
std::map<std::string, std::vector<Candidate>> collect_candidates(const Trajectory& traj,
                                                                 double threshold) {
  std::map<std::string, std::vector<Candidate>> out;
  for (std::size_t f = 0; f < traj.frames.size(); ++f) {
    const auto& dets = traj.frames[f].detections;
    for (std::size_t d = 0; d < dets.size(); ++d) {
      if (!(dets[d].confidence > threshold)) continue;
      out[normalize_label(dets[d].label)].push_back(Candidate{f, d, dets[d].bbox.area()});
    }
  }
  return out;
}

// Integer pixels covered by a half-open float bbox.
void bbox_pixel_range(const PixelBBox& b, int& u0, int& u1, int& v0, int& v1) {
  u0 = static_cast<int>(std::ceil(b.xmin));
  u1 = static_cast<int>(std::ceil(b.xmax));
  v0 = static_cast<int>(std::ceil(b.ymin));
  v1 = static_cast<int>(std::ceil(b.ymax));
}

}  // namespace

std::string_view to_string(ObjectIndexVariant v) {
  switch (v) {
    case ObjectIndexVariant::ObjectDepth: return "object-depth";
    case ObjectIndexVariant::ObjectViewpoint: return "object-viewpoint";
  }
  return "unknown";
}

ObjectIndexVariant object_index_variant_from_string(std::string_view s) {
  if (s == "object-depth") return ObjectIndexVariant::ObjectDepth;
  if (s == "object-viewpoint") return ObjectIndexVariant::ObjectViewpoint;
  throw Error(Errc::InvalidArgument, "unknown index variant: " + std::string(s));
}

double compensated_area(double area, double view_angle) {
  const double c = std::cos(view_angle);
  return area * c * c * c;
}

ObjectIndex build_object_depth(const Trajectory& traj, double confidence_threshold) {
  ObjectIndex index;
  index.variant = ObjectIndexVariant::ObjectDepth;
  index.confidence_threshold = confidence_threshold;

  for (auto& [key, candidates] : collect_candidates(traj, confidence_threshold)) {
    // Largest bbox first; (frame, detection) order breaks area ties.
    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) { return a.area > b.area; });

    bool stored = false;
    for (const Candidate& cand : candidates) {
      const Frame& frame = traj.frames[cand.frame_index];
      const Detection& det = frame.detections[cand.detection_index];
      int u0, u1, v0, v1;
      bbox_pixel_range(det.bbox, u0, u1, v0, v1);
      Vec3 sum = Vec3::Zero();
      std::int64_t count = 0;
      for (int v = v0; v < v1; ++v) {
        for (int u = u0; u < u1; ++u) {
          const float z = frame.depth.at(u, v);
          if (!DepthImage::is_valid(z)) continue;
          const WorldPoint wp =
              camera_to_world(backproject(u, v, z, traj.intrinsics), frame.pose);
          sum += wp.p;
          ++count;
        }
      }
      if (count == 0) continue;  // all pixels invalid: fall back to next bbox
      IndexEntry entry;
      entry.label = det.label;
      entry.point = WorldPoint{sum / static_cast<double>(count)};
      entry.source_frame = det.frame_id;
      entry.score = det.bbox.area();
      index.entries.emplace(key, std::move(entry));
      stored = true;
      break;
    }
    if (!stored) {
      throw Error(Errc::NoValidDepth,
                  "every detection of \"" + key + "\" covers only invalid depth");
    }
  }
  return index;
}

ObjectIndex build_object_viewpoint(const Trajectory& traj, double confidence_threshold,
                                   bool compensate) {
  ObjectIndex index;
  index.variant = ObjectIndexVariant::ObjectViewpoint;
  index.confidence_threshold = confidence_threshold;
  index.compensate = compensate;

  for (const auto& [key, candidates] : collect_candidates(traj, confidence_threshold)) {
    double best_score = -std::numeric_limits<double>::infinity();
    const Candidate* best = nullptr;
    for (const Candidate& cand : candidates) {
      const Detection& det = traj.frames[cand.frame_index].detections[cand.detection_index];
      const double score =
          compensate ? compensated_area(cand.area, bbox_view_angle(det.bbox, traj.intrinsics))
                     : cand.area;
      if (score > best_score) {
        best_score = score;
        best = &cand;
      }
    }
    const Frame& frame = traj.frames[best->frame_index];
    const Detection& det = frame.detections[best->detection_index];
    IndexEntry entry;
    entry.label = det.label;
    entry.point = WorldPoint{frame.pose.position};
    entry.source_frame = det.frame_id;
    entry.score = det.bbox.area();
    index.entries.emplace(key, std::move(entry));
  }
  return index;
}

EmbeddingGrid accumulate_grid(const Trajectory& traj, const Embedder& embedder,
                              double cell_size, std::vector<int> dropped_dims) {
  if (!embedder.supports_pixel_embeddings()) {
    throw Error(Errc::EmbedderLacksPixelCapability, embedder.identity());
  }
  if (!(cell_size > 0.0)) {
    throw Error(Errc::InvalidArgument, "cell size must be positive");
  }
  for (int d : dropped_dims) {
    if (d < 0 || d >= embedder.dimension()) {
      throw Error(Errc::InvalidArgument, "dropped dimension out of range");
    }
  }

  EmbeddingGrid grid;
  grid.cell_size = cell_size;
  grid.dimension = embedder.dimension();
  grid.embedder_tag = embedder.identity();
  grid.dropped_dims = std::move(dropped_dims);
  std::sort(grid.dropped_dims.begin(), grid.dropped_dims.end());

  // First pass: world-frame footprint of all valid pixels.
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();
  for (const Frame& frame : traj.frames) {
    for (int v = 0; v < frame.depth.height; ++v) {
      for (int u = 0; u < frame.depth.width; ++u) {
        const float z = frame.depth.at(u, v);
        if (!DepthImage::is_valid(z)) continue;
        const WorldPoint wp =
            camera_to_world(backproject(u, v, z, traj.intrinsics), frame.pose);
        min_x = std::min(min_x, wp.p.x());
        max_x = std::max(max_x, wp.p.x());
        min_y = std::min(min_y, wp.p.y());
        max_y = std::max(max_y, wp.p.y());
      }
    }
  }
  if (!(min_x <= max_x)) {
    return grid;  // no valid pixels anywhere; empty grid
  }
  grid.origin_x = std::floor(min_x / cell_size) * cell_size;
  grid.origin_y = std::floor(min_y / cell_size) * cell_size;
  grid.cols = static_cast<int>(std::floor((max_x - grid.origin_x) / cell_size)) + 1;
  grid.rows = static_cast<int>(std::floor((max_y - grid.origin_y) / cell_size)) + 1;

  const std::size_t n_cells = static_cast<std::size_t>(grid.rows) * grid.cols;
  grid.means.assign(n_cells * grid.dimension, 0.0);
  grid.counts.assign(n_cells, 0);
  grid.mean_heights.assign(n_cells, 0.0);

  // Second pass: accumulate sums per cell, in frame order.
  for (const Frame& frame : traj.frames) {
    const Eigen::MatrixXf pixel_embeddings = embedder.embed_pixels(frame);
    for (int v = 0; v < frame.depth.height; ++v) {
      for (int u = 0; u < frame.depth.width; ++u) {
        const float z = frame.depth.at(u, v);
        if (!DepthImage::is_valid(z)) continue;
        const WorldPoint wp =
            camera_to_world(backproject(u, v, z, traj.intrinsics), frame.pose);
        const int col = static_cast<int>(std::floor((wp.p.x() - grid.origin_x) / cell_size));
        const int row = static_cast<int>(std::floor((wp.p.y() - grid.origin_y) / cell_size));
        if (col < 0 || col >= grid.cols || row < 0 || row >= grid.rows) continue;
        const std::size_t cell = grid.cell_index(row, col);
        const Eigen::Index pix = static_cast<Eigen::Index>(v) * frame.depth.width + u;
        double* mean = &grid.means[cell * grid.dimension];
        for (int k = 0; k < grid.dimension; ++k) {
          mean[k] += pixel_embeddings(pix, k);
        }
        grid.mean_heights[cell] += wp.p.z();
        ++grid.counts[cell];
      }
    }
  }
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    if (grid.counts[cell] == 0) continue;
    const double inv = 1.0 / static_cast<double>(grid.counts[cell]);
    for (int k = 0; k < grid.dimension; ++k) {
      grid.means[cell * grid.dimension + k] *= inv;
    }
    grid.mean_heights[cell] *= inv;
  }
  return grid;
}

IndexEntry query_grid(const EmbeddingGrid& grid, std::string_view text,
                      const Embedder& embedder) {
  if (embedder.identity() != grid.embedder_tag) {
    throw Error(Errc::EmbedderMismatch, "grid built with " + grid.embedder_tag +
                                            " but queried with " + embedder.identity());
  }
  if (grid.rows == 0 || grid.cols == 0) {
    throw Error(Errc::EmptyGrid, "grid holds no cells");
  }

  Eigen::VectorXd query = embedder.embed_text(text);
  if (query.size() != grid.dimension) {
    throw Error(Errc::EmbedderMismatch, "embedding dimension mismatch");
  }
  for (int d : grid.dropped_dims) {
    query[d] = 0.0;
  }
  const double qnorm = query.norm();
  if (!(qnorm > 0.0)) {
    throw Error(Errc::EmptyGrid,
                "no valid similarity: dropped dimensions cover the whole embedding");
  }
  query /= qnorm;

  double best = -std::numeric_limits<double>::infinity();
  int best_row = -1;
  int best_col = -1;
  Eigen::VectorXd cell_vec(grid.dimension);
  for (int row = 0; row < grid.rows; ++row) {
    for (int col = 0; col < grid.cols; ++col) {
      const std::size_t cell = grid.cell_index(row, col);
      if (grid.counts[cell] == 0) continue;
      for (int k = 0; k < grid.dimension; ++k) {
        cell_vec[k] = grid.means[cell * grid.dimension + k];
      }
      for (int d : grid.dropped_dims) {
        cell_vec[d] = 0.0;
      }
      const double norm = cell_vec.norm();
      if (!(norm > 0.0)) continue;  // degenerate mean (e.g. e and -e averaged out)
      const double cosine = query.dot(cell_vec) / norm;
      if (cosine > best) {  // strict: ties keep the lowest (row, col)
        best = cosine;
        best_row = row;
        best_col = col;
      }
    }
  }
  if (best_row < 0) {
    throw Error(Errc::EmptyGrid, "grid holds no queryable cells");
  }

  const std::size_t cell = grid.cell_index(best_row, best_col);
  IndexEntry entry;
  entry.label = std::string(text);
  entry.point = WorldPoint{Vec3(grid.origin_x + (best_col + 0.5) * grid.cell_size,
                                grid.origin_y + (best_row + 0.5) * grid.cell_size,
                                grid.mean_heights[cell])};
  entry.source_frame = -1;
  entry.score = best;
  return entry;
}

const IndexEntry& lookup(const ObjectIndex& index, std::string_view label) {
  const auto it = index.entries.find(normalize_label(label));
  if (it == index.entries.end()) {
    throw Error(Errc::LabelNotIndexed, std::string(label));
  }
  return it->second;
}

WorldPoint lookup(const EmbeddingGrid& grid, std::string_view text, const Embedder& embedder) {
  return query_grid(grid, text, embedder).point;
}

void save_object_index(const ObjectIndex& index, const fs::path& path) {
  json j;
  j["variant"] = std::string(to_string(index.variant));
  j["confidence_threshold"] = index.confidence_threshold;
  j["compensate"] = index.compensate;
  j["entries"] = json::array();
  for (const auto& [key, entry] : index.entries) {
    j["entries"].push_back({{"key", key},
                            {"label", entry.label},
                            {"point", {entry.point.p.x(), entry.point.p.y(), entry.point.p.z()}},
                            {"source_frame", entry.source_frame},
                            {"score", entry.score}});
  }
  std::ofstream out(path);
  if (!out) {
    throw Error(Errc::MissingFile, "cannot open for writing: " + path.string());
  }
  out << j.dump(2) << "\n";
}

ObjectIndex load_object_index(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::MissingFile, path.string());
  }
  json j;
  try {
    j = json::parse(in);
    ObjectIndex index;
    index.variant = object_index_variant_from_string(j.at("variant").get<std::string>());
    index.confidence_threshold = j.at("confidence_threshold").get<double>();
    index.compensate = j.at("compensate").get<bool>();
    for (const auto& e : j.at("entries")) {
      IndexEntry entry;
      entry.label = e.at("label").get<std::string>();
      const auto& p = e.at("point");
      entry.point = WorldPoint{
          Vec3(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>())};
      entry.source_frame = e.at("source_frame").get<std::int64_t>();
      entry.score = e.at("score").get<double>();
      index.entries.emplace(e.at("key").get<std::string>(), std::move(entry));
    }
    return index;
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

void save_grid(const EmbeddingGrid& grid, const fs::path& manifest_path) {
  fs::path blob_path = manifest_path;
  blob_path.replace_extension(".bin");

  json j;
  j["cell_size"] = grid.cell_size;
  j["origin"] = {grid.origin_x, grid.origin_y};
  j["rows"] = grid.rows;
  j["cols"] = grid.cols;
  j["dimension"] = grid.dimension;
  j["embedder"] = grid.embedder_tag;
  j["dropped_dims"] = grid.dropped_dims;
  j["counts"] = grid.counts;
  j["mean_heights"] = grid.mean_heights;
  j["blob"] = blob_path.filename().string();
  std::ofstream out(manifest_path);
  if (!out) {
    throw Error(Errc::MissingFile, "cannot open for writing: " + manifest_path.string());
  }
  out << j.dump(2) << "\n";

  std::ofstream blob(blob_path, std::ios::binary | std::ios::trunc);
  if (!blob) {
    throw Error(Errc::MissingFile, "cannot open for writing: " + blob_path.string());
  }
  for (double m : grid.means) {
    const float f = static_cast<float>(m);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(bits & 0xff),
        static_cast<unsigned char>((bits >> 8) & 0xff),
        static_cast<unsigned char>((bits >> 16) & 0xff),
        static_cast<unsigned char>((bits >> 24) & 0xff),
    };
    blob.write(reinterpret_cast<const char*>(bytes), 4);
  }
}

EmbeddingGrid load_grid(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw Error(Errc::MissingFile, manifest_path.string());
  }
  EmbeddingGrid grid;
  fs::path blob_path;
  try {
    const json j = json::parse(in);
    grid.cell_size = j.at("cell_size").get<double>();
    grid.origin_x = j.at("origin").at(0).get<double>();
    grid.origin_y = j.at("origin").at(1).get<double>();
    grid.rows = j.at("rows").get<int>();
    grid.cols = j.at("cols").get<int>();
    grid.dimension = j.at("dimension").get<int>();
    grid.embedder_tag = j.at("embedder").get<std::string>();
    grid.dropped_dims = j.at("dropped_dims").get<std::vector<int>>();
    grid.counts = j.at("counts").get<std::vector<std::int64_t>>();
    grid.mean_heights = j.at("mean_heights").get<std::vector<double>>();
    blob_path = manifest_path.parent_path() / j.at("blob").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, manifest_path.string() + ": " + e.what());
  }

  const std::size_t n_cells = static_cast<std::size_t>(grid.rows) * grid.cols;
  if (grid.counts.size() != n_cells || grid.mean_heights.size() != n_cells) {
    throw Error(Errc::ManifestMismatch,
                manifest_path.string() + ": counts/heights do not match rows*cols");
  }
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) {
    throw Error(Errc::MissingFile, blob_path.string());
  }
  const std::size_t n_floats = n_cells * grid.dimension;
  std::vector<unsigned char> raw(n_floats * 4);
  blob.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!blob || blob.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(Errc::ManifestMismatch, blob_path.string() + ": blob size mismatch");
  }
  grid.means.resize(n_floats);
  for (std::size_t i = 0; i < n_floats; ++i) {
    const std::uint32_t bits = static_cast<std::uint32_t>(raw[4 * i]) |
                               (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                               (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                               (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    grid.means[i] = f;
  }
  return grid;
}

}  // namespace cartier
