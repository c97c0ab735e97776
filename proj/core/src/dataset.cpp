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

#include "cartier/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace cartier {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kDepthMagic[4] = {'C', 'D', 'P', 'T'};
constexpr std::uint32_t kDepthVersion = 1;
constexpr double kQuatLoadTolerance = 1e-3;

void put_u32_le(std::ostream& os, std::uint32_t v) {
  const unsigned char bytes[4] = {
      static_cast<unsigned char>(v & 0xff),
      static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff),
      static_cast<unsigned char>((v >> 24) & 0xff),
  };
  os.write(reinterpret_cast<const char*>(bytes), 4);
}

std::uint32_t get_u32_le(std::istream& is) {
  unsigned char bytes[4];
  is.read(reinterpret_cast<char*>(bytes), 4);
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

void put_f32_le(std::ostream& os, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32_le(os, v);
}

json parse_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::MissingFile, path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

json parse_jsonl_line(const fs::path& path, const std::string& line, int line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord,
                path.string() + ":" + std::to_string(line_no) + ": " + e.what());
  }
}

[[noreturn]] void malformed(const fs::path& path, int line_no, const std::string& what) {
  throw Error(Errc::MalformedRecord,
              path.string() + ":" + std::to_string(line_no) + ": " + what);
}

std::string depth_file_name(std::int64_t frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld.cdpt", static_cast<long long>(frame_id));
  return buf;
}

json intrinsics_to_json(const Intrinsics& intr) {
  return json{{"fx", intr.fx},       {"fy", intr.fy},     {"cx", intr.cx},
              {"cy", intr.cy},       {"width", intr.width}, {"height", intr.height}};
}

Intrinsics intrinsics_from_json(const json& j) {
  Intrinsics intr;
  intr.fx = j.at("fx").get<double>();
  intr.fy = j.at("fy").get<double>();
  intr.cx = j.at("cx").get<double>();
  intr.cy = j.at("cy").get<double>();
  intr.width = j.at("width").get<int>();
  intr.height = j.at("height").get<int>();
  intr.validate();
  return intr;
}

AABB3 aabb_from_json(const json& j, const fs::path& path) {
  const auto& mn = j.at("min");
  const auto& mx = j.at("max");
  AABB3 box;
  box.min = Vec3(mn.at(0).get<double>(), mn.at(1).get<double>(), mn.at(2).get<double>());
  box.max = Vec3(mx.at(0).get<double>(), mx.at(1).get<double>(), mx.at(2).get<double>());
  if (!(box.min.array() <= box.max.array()).all()) {
    throw Error(Errc::MalformedRecord, path.string() + ": aabb min > max");
  }
  return box;
}

}  // namespace

std::string_view to_string(QueryType t) {
  switch (t) {
    case QueryType::Explicit: return "explicit";
    case QueryType::Implicit: return "implicit";
    case QueryType::Conversational: return "conversational";
  }
  return "unknown";
}

QueryType query_type_from_string(std::string_view s) {
  if (s == "explicit") return QueryType::Explicit;
  if (s == "implicit") return QueryType::Implicit;
  if (s == "conversational") return QueryType::Conversational;
  throw Error(Errc::InvalidQueryType, std::string(s));
}

std::string normalize_label(std::string_view label) {
  std::string out;
  out.reserve(label.size());
  bool pending_space = false;
  for (char c : label) {
    if (c == '_' || c == '-' || std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

DepthImage read_depth(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(Errc::MissingFile, path.string());
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kDepthMagic, 4) != 0) {
    throw Error(Errc::MalformedRecord, path.string() + ": bad depth magic");
  }
  const std::uint32_t version = get_u32_le(in);
  if (version != kDepthVersion) {
    throw Error(Errc::MalformedRecord,
                path.string() + ": unsupported depth version " + std::to_string(version));
  }
  DepthImage img;
  img.width = static_cast<int>(get_u32_le(in));
  img.height = static_cast<int>(get_u32_le(in));
  if (!in || img.width <= 0 || img.height <= 0) {
    throw Error(Errc::MalformedRecord, path.string() + ": bad depth dimensions");
  }
  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  img.data.resize(count);
  std::vector<unsigned char> raw(count * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) {
    throw Error(Errc::MalformedRecord, path.string() + ": truncated depth payload");
  }
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint32_t v = static_cast<std::uint32_t>(raw[4 * i]) |
                            (static_cast<std::uint32_t>(raw[4 * i + 1]) << 8) |
                            (static_cast<std::uint32_t>(raw[4 * i + 2]) << 16) |
                            (static_cast<std::uint32_t>(raw[4 * i + 3]) << 24);
    std::memcpy(&img.data[i], &v, 4);
  }
  return img;
}

void write_depth(const DepthImage& depth, const fs::path& path) {
  if (depth.width <= 0 || depth.height <= 0 ||
      depth.data.size() != static_cast<std::size_t>(depth.width) * depth.height) {
    throw Error(Errc::InvalidArgument, "depth image dimensions do not match payload");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(Errc::MissingFile, "cannot open for writing: " + path.string());
  }
  out.write(kDepthMagic, 4);
  put_u32_le(out, kDepthVersion);
  put_u32_le(out, static_cast<std::uint32_t>(depth.width));
  put_u32_le(out, static_cast<std::uint32_t>(depth.height));
  for (float f : depth.data) {
    put_f32_le(out, f);
  }
  if (!out) {
    throw Error(Errc::MissingFile, "short write: " + path.string());
  }
}

Trajectory load_trajectory(const fs::path& directory) {
  const fs::path manifest_path = directory / "manifest.json";
  const fs::path poses_path = directory / "poses.jsonl";
  const fs::path detections_path = directory / "detections.jsonl";

  const json manifest = parse_json_file(manifest_path);
  Trajectory traj;
  try {
    traj.intrinsics = intrinsics_from_json(manifest.at("intrinsics"));
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, manifest_path.string() + ": " + e.what());
  }
  const auto frame_count = manifest.value("frame_count", -1);
  if (frame_count < 0) {
    throw Error(Errc::MalformedRecord, manifest_path.string() + ": missing frame_count");
  }

  // poses.jsonl, one frame per line
  std::ifstream poses_in(poses_path);
  if (!poses_in) {
    throw Error(Errc::MissingFile, poses_path.string());
  }
  std::string line;
  int line_no = 0;
  std::int64_t last_frame_id = -1;
  while (std::getline(poses_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_jsonl_line(poses_path, line, line_no);
    Frame frame;
    try {
      frame.pose.frame_id = j.at("frame_id").get<std::int64_t>();
      frame.pose.timestamp = j.at("timestamp").get<double>();
      const auto& pos = j.at("position");
      frame.pose.position =
          Vec3(pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>());
      const auto& q = j.at("quaternion");
      frame.pose.orientation = Quat(q.at(0).get<double>(), q.at(1).get<double>(),
                                    q.at(2).get<double>(), q.at(3).get<double>());
    } catch (const json::exception& e) {
      malformed(poses_path, line_no, e.what());
    }
    if (frame.pose.frame_id <= last_frame_id) {
      malformed(poses_path, line_no, "frame_ids must be strictly increasing");
    }
    last_frame_id = frame.pose.frame_id;
    const double qnorm = frame.pose.orientation.norm();
    if (std::abs(qnorm - 1.0) > kQuatLoadTolerance) {
      malformed(poses_path, line_no, "quaternion norm " + std::to_string(qnorm));
    }
    frame.pose.orientation.normalize();
    traj.frames.push_back(std::move(frame));
  }
  if (static_cast<std::int64_t>(traj.frames.size()) != frame_count) {
    throw Error(Errc::ManifestMismatch,
                manifest_path.string() + ": frame_count " + std::to_string(frame_count) +
                    " but poses.jsonl has " + std::to_string(traj.frames.size()));
  }

  // depth images, one per frame, keyed by frame_id
  std::unordered_map<std::int64_t, std::size_t> frame_index;
  for (std::size_t i = 0; i < traj.frames.size(); ++i) {
    Frame& frame = traj.frames[i];
    frame_index[frame.pose.frame_id] = i;
    const fs::path depth_path = directory / "depth" / depth_file_name(frame.pose.frame_id);
    frame.depth = read_depth(depth_path);
    if (frame.depth.width != traj.intrinsics.width ||
        frame.depth.height != traj.intrinsics.height) {
      throw Error(Errc::ManifestMismatch,
                  depth_path.string() + ": depth " + std::to_string(frame.depth.width) + "x" +
                      std::to_string(frame.depth.height) + " but manifest intrinsics " +
                      std::to_string(traj.intrinsics.width) + "x" +
                      std::to_string(traj.intrinsics.height));
    }
  }

  // detections.jsonl
  std::ifstream det_in(detections_path);
  if (!det_in) {
    throw Error(Errc::MissingFile, detections_path.string());
  }
  line_no = 0;
  while (std::getline(det_in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_jsonl_line(detections_path, line, line_no);
    Detection det;
    try {
      det.frame_id = j.at("frame_id").get<std::int64_t>();
      det.label = j.at("label").get<std::string>();
      det.confidence = j.at("confidence").get<double>();
      const auto& b = j.at("bbox");
      det.bbox = PixelBBox{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                           b.at(3).get<double>()};
    } catch (const json::exception& e) {
      malformed(detections_path, line_no, e.what());
    }
    if (det.label.empty()) {
      malformed(detections_path, line_no, "empty label");
    }
    if (det.confidence < 0.0 || det.confidence > 1.0) {
      malformed(detections_path, line_no, "confidence outside [0, 1]");
    }
    if (!(det.bbox.xmin >= 0.0 && det.bbox.xmin < det.bbox.xmax &&
          det.bbox.xmax <= traj.intrinsics.width && det.bbox.ymin >= 0.0 &&
          det.bbox.ymin < det.bbox.ymax && det.bbox.ymax <= traj.intrinsics.height)) {
      malformed(detections_path, line_no, "bbox violates image bounds");
    }
    const auto it = frame_index.find(det.frame_id);
    if (it == frame_index.end()) {
      malformed(detections_path, line_no,
                "detection references absent frame_id " + std::to_string(det.frame_id));
    }
    traj.frames[it->second].detections.push_back(std::move(det));
  }
  return traj;
}

void save_trajectory(const Trajectory& trajectory, const fs::path& directory) {
  fs::create_directories(directory / "depth");

  json manifest;
  manifest["intrinsics"] = intrinsics_to_json(trajectory.intrinsics);
  manifest["frame_count"] = trajectory.frames.size();
  manifest["depth_pattern"] = "depth/%06d.cdpt";
  std::ofstream(directory / "manifest.json") << manifest.dump(2) << "\n";

  std::ofstream poses(directory / "poses.jsonl");
  std::ofstream dets(directory / "detections.jsonl");
  for (const Frame& frame : trajectory.frames) {
    json j;
    j["frame_id"] = frame.pose.frame_id;
    j["timestamp"] = frame.pose.timestamp;
    j["position"] = {frame.pose.position.x(), frame.pose.position.y(),
                     frame.pose.position.z()};
    j["quaternion"] = {frame.pose.orientation.w(), frame.pose.orientation.x(),
                       frame.pose.orientation.y(), frame.pose.orientation.z()};
    poses << j.dump() << "\n";
    for (const Detection& det : frame.detections) {
      json d;
      d["frame_id"] = det.frame_id;
      d["label"] = det.label;
      d["confidence"] = det.confidence;
      d["bbox"] = {det.bbox.xmin, det.bbox.ymin, det.bbox.xmax, det.bbox.ymax};
      dets << d.dump() << "\n";
    }
    write_depth(frame.depth, directory / "depth" / depth_file_name(frame.pose.frame_id));
  }
}

SceneTruth load_scene_truth(const fs::path& path) {
  const json j = parse_json_file(path);
  SceneTruth truth;
  try {
    truth.scene_id = j.at("scene_id").get<std::string>();
    std::unordered_set<std::string> seen_ids;
    for (const auto& obj : j.at("objects")) {
      SceneObject so;
      so.instance_id = obj.at("instance_id").get<std::string>();
      so.label = obj.at("label").get<std::string>();
      so.box = aabb_from_json(obj.at("aabb"), path);
      if (!seen_ids.insert(so.instance_id).second) {
        throw Error(Errc::MalformedRecord,
                    path.string() + ": duplicate instance_id " + so.instance_id);
      }
      truth.objects.push_back(std::move(so));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  return truth;
}

void save_scene_truth(const SceneTruth& truth, const fs::path& path) {
  json j;
  j["scene_id"] = truth.scene_id;
  j["objects"] = json::array();
  for (const SceneObject& obj : truth.objects) {
    j["objects"].push_back(
        {{"instance_id", obj.instance_id},
         {"label", obj.label},
         {"aabb",
          {{"min", {obj.box.min.x(), obj.box.min.y(), obj.box.min.z()}},
           {"max", {obj.box.max.x(), obj.box.max.y(), obj.box.max.z()}}}}});
  }
  std::ofstream(path) << j.dump(2) << "\n";
}

std::vector<Query> load_queries(const fs::path& path, const SceneTruth& truth) {
  const json j = parse_json_file(path);
  std::set<std::string> truth_labels;
  for (const SceneObject& obj : truth.objects) {
    truth_labels.insert(normalize_label(obj.label));
  }

  std::vector<Query> queries;
  try {
    for (const auto& q : j) {
      Query query;
      query.query_id = q.at("query_id").get<std::string>();
      query.type = query_type_from_string(q.at("query_type").get<std::string>());
      query.text = q.at("text").get<std::string>();
      for (const auto& label : q.at("plausible_labels")) {
        query.plausible_labels.push_back(label.get<std::string>());
      }
      if (query.plausible_labels.empty()) {
        throw Error(Errc::MalformedRecord,
                    path.string() + ": query " + query.query_id + " has no plausible labels");
      }
      for (const std::string& label : query.plausible_labels) {
        if (truth_labels.count(normalize_label(label)) == 0) {
          throw Error(Errc::UnknownPlausibleLabel,
                      "query " + query.query_id + ": \"" + label +
                          "\" names no object in scene " + truth.scene_id);
        }
      }
      queries.push_back(std::move(query));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  return queries;
}

void save_queries(const std::vector<Query>& queries, const fs::path& path) {
  json j = json::array();
  for (const Query& q : queries) {
    j.push_back({{"query_id", q.query_id},
                 {"query_type", std::string(to_string(q.type))},
                 {"text", q.text},
                 {"plausible_labels", q.plausible_labels}});
  }
  std::ofstream(path) << j.dump(2) << "\n";
}

std::vector<std::string> detector_vocabulary(const Trajectory& trajectory,
                                             double confidence_threshold) {
  std::vector<std::string> vocabulary;
  std::unordered_set<std::string> seen;
  for (const Frame& frame : trajectory.frames) {
    // Detections within one frame are simultaneous, so new labels are
    // appended in sorted order to make the result independent of the
    // detection list order inside the frame.
    std::vector<std::pair<std::string, std::string>> fresh;  // (normalized, original)
    for (const Detection& det : frame.detections) {
      if (!(det.confidence > confidence_threshold)) continue;
      const std::string norm = normalize_label(det.label);
      if (seen.count(norm)) continue;
      bool pending = false;
      for (const auto& [n, _] : fresh) {
        if (n == norm) {
          pending = true;
          break;
        }
      }
      if (!pending) fresh.emplace_back(norm, det.label);
    }
    std::sort(fresh.begin(), fresh.end());
    for (auto& [norm, original] : fresh) {
      seen.insert(norm);
      vocabulary.push_back(std::move(original));
    }
  }
  return vocabulary;
}

}  // namespace cartier
