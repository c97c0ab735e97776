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

#include "cartier/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

namespace cartier {

namespace {

constexpr double kNearPlane = 0.05;
constexpr double kWallMargin = 0.45;   // object clearance from walls
constexpr double kCameraMargin = 0.25; // camera clearance from walls
constexpr double kObjectGap = 0.35;    // minimum gap between placed boxes
constexpr int kPlacementAttempts = 120;
constexpr int kVantageAttempts = 300;
constexpr int kSceneAttempts = 6;

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic uniforms/gaussians independent of the standard library's
// distribution implementations.
struct Rng {
  std::mt19937_64 engine;

  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    engine.seed(splitmix64(s));
  }

  double uniform() { return (engine() >> 11) * 0x1.0p-53; }  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) { return static_cast<int>(engine() % static_cast<std::uint64_t>(n)); }

  double gaussian() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

// Camera-frame axis intervals of an axis-aligned world box under one of the
// four level headings. All entries of the rotation are 0/+-1, so the box
// stays axis-aligned in the camera frame.
struct CameraBox {
  double x0, x1;  // right
  double y0, y1;  // down
  double z0, z1;  // forward
};

struct AxisFrame {
  Vec3 right, down, forward;
};

AxisFrame axis_frame(int heading) {
  const Vec3 down(0.0, 0.0, -1.0);
  Vec3 forward;
  switch (heading & 3) {
    case 0: forward = Vec3(1.0, 0.0, 0.0); break;
    case 1: forward = Vec3(0.0, 1.0, 0.0); break;
    case 2: forward = Vec3(-1.0, 0.0, 0.0); break;
    default: forward = Vec3(0.0, -1.0, 0.0); break;
  }
  return AxisFrame{down.cross(forward), down, forward};
}

double axis_interval_lo(const Vec3& axis, const AABB3& box, const Vec3& origin) {
  double lo = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double a = axis[i];
    if (a > 0.5) {
      lo += box.min[i] - origin[i];
    } else if (a < -0.5) {
      lo += origin[i] - box.max[i];
    }
  }
  return lo;
}

double axis_interval_hi(const Vec3& axis, const AABB3& box, const Vec3& origin) {
  double hi = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double a = axis[i];
    if (a > 0.5) {
      hi += box.max[i] - origin[i];
    } else if (a < -0.5) {
      hi += origin[i] - box.min[i];
    }
  }
  return hi;
}

CameraBox camera_box(const AABB3& box, const AxisFrame& axes, const Vec3& camera) {
  return CameraBox{axis_interval_lo(axes.right, box, camera),
                   axis_interval_hi(axes.right, box, camera),
                   axis_interval_lo(axes.down, box, camera),
                   axis_interval_hi(axes.down, box, camera),
                   axis_interval_lo(axes.forward, box, camera),
                   axis_interval_hi(axes.forward, box, camera)};
}

struct Rect {
  double u0, v0, u1, v1;
  bool empty() const { return !(u0 < u1 && v0 < v1); }
};

Rect clip_rect(Rect r, const Intrinsics& intr) {
  r.u0 = std::max(r.u0, 0.0);
  r.v0 = std::max(r.v0, 0.0);
  r.u1 = std::min(r.u1, static_cast<double>(intr.width));
  r.v1 = std::min(r.v1, static_cast<double>(intr.height));
  return r;
}

// Projection of the front face (the Z = z0 slice) of a camera-frame box.
Rect front_rect(const CameraBox& cb, const Intrinsics& intr) {
  return Rect{intr.cx + intr.fx * cb.x0 / cb.z0, intr.cy + intr.fy * cb.y0 / cb.z0,
              intr.cx + intr.fx * cb.x1 / cb.z0, intr.cy + intr.fy * cb.y1 / cb.z0};
}

// Bounding box of all 8 projected corners.
Rect corner_bbox(const CameraBox& cb, const Intrinsics& intr) {
  Rect r{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
         -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double z : {cb.z0, cb.z1}) {
    for (double x : {cb.x0, cb.x1}) {
      const double u = intr.cx + intr.fx * x / z;
      r.u0 = std::min(r.u0, u);
      r.u1 = std::max(r.u1, u);
    }
    for (double y : {cb.y0, cb.y1}) {
      const double v = intr.cy + intr.fy * y / z;
      r.v0 = std::min(r.v0, v);
      r.v1 = std::max(r.v1, v);
    }
  }
  return r;
}

// Integer pixel range [begin, end) covered by a half-open float interval.
void pixel_range(double lo, double hi, int& begin, int& end) {
  begin = static_cast<int>(std::ceil(lo));
  end = static_cast<int>(std::ceil(hi));
}

bool pixel_ranges_equal(const Rect& a, const Rect& b) {
  int ab, ae, bb, be;
  pixel_range(a.u0, a.u1, ab, ae);
  pixel_range(b.u0, b.u1, bb, be);
  if (ab != bb || ae != be) return false;
  pixel_range(a.v0, a.v1, ab, ae);
  pixel_range(b.v0, b.v1, bb, be);
  return ab == bb && ae == be;
}

bool pixel_ranges_intersect(const Rect& a, const Rect& b) {
  int au0, au1, av0, av1, bu0, bu1, bv0, bv1;
  pixel_range(a.u0, a.u1, au0, au1);
  pixel_range(a.v0, a.v1, av0, av1);
  pixel_range(b.u0, b.u1, bu0, bu1);
  pixel_range(b.v0, b.v1, bv0, bv1);
  return std::max(au0, bu0) < std::min(au1, bu1) && std::max(av0, bv0) < std::min(av1, bv1);
}

// Segment camera->point against a box; true when the box blocks the view.
bool segment_hits_box(const Vec3& origin, const Vec3& target, const AABB3& box) {
  const Vec3 d = target - origin;
  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (std::abs(d[i]) < 1e-12) {
      if (origin[i] < box.min[i] || origin[i] > box.max[i]) return false;
      continue;
    }
    double t0 = (box.min[i] - origin[i]) / d[i];
    double t1 = (box.max[i] - origin[i]) / d[i];
    if (t0 > t1) std::swap(t0, t1);
    t_enter = std::max(t_enter, t0);
    t_exit = std::min(t_exit, t1);
    if (t_enter > t_exit) return false;
  }
  return t_enter < 1.0 - 1e-9 && t_exit > 1e-9 && t_enter > 1e-9;
}

// Forward-depth at which the ray through pixel (u, v) exits the room shell.
double room_exit_depth(const Vec3& camera, const AxisFrame& axes, const Vec3& room_extents,
                       double u, double v, const Intrinsics& intr) {
  const Vec3 dir = axes.right * ((u - intr.cx) / intr.fx) + axes.down * ((v - intr.cy) / intr.fy) +
                   axes.forward;  // camera-Z component of dir is exactly 1
  double t_exit = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    if (dir[i] > 1e-12) {
      t_exit = std::min(t_exit, (room_extents[i] - camera[i]) / dir[i]);
    } else if (dir[i] < -1e-12) {
      t_exit = std::min(t_exit, (0.0 - camera[i]) / dir[i]);
    }
  }
  return t_exit;
}

int heading_of_pose(const Pose& pose) {
  const Vec3 f = pose.orientation * Vec3(0.0, 0.0, 1.0);
  for (int h = 0; h < 4; ++h) {
    if ((axis_frame(h).forward - f).norm() < 1e-9) return h;
  }
  throw Error(Errc::InvalidArgument, "pose heading is not axis-aligned");
}

}  // namespace

Quat axis_heading(int heading) {
  const AxisFrame axes = axis_frame(heading);
  Eigen::Matrix3d rot;
  rot.col(0) = axes.right;
  rot.col(1) = axes.down;
  rot.col(2) = axes.forward;
  return Quat(rot).normalized();
}

const std::array<std::string, 40>& household_vocabulary() {
  static const std::array<std::string, 40> kLabels = {
      "bed",        "sofa",          "armchair",   "office chair", "desk",
      "dining table", "coffee table", "bookshelf",  "wardrobe",     "dresser",
      "nightstand", "floor lamp",    "mirror",     "television",   "laptop",
      "keyboard",   "monitor",       "printer",    "telephone",    "wall clock",
      "painting",   "potted plant",  "vase",       "aquarium",     "pillow",
      "blanket",    "bathtub",       "toilet",     "sink",         "towel rack",
      "medicine cabinet", "refrigerator", "oven",  "microwave",    "toaster",
      "kettle",     "coffee machine", "dishwasher", "cutting board", "trash can"};
  return kLabels;
}

void SyntheticConfig::validate() const {
  intrinsics.validate();
  if (object_count <= 0 || waypoint_count <= 0) {
    throw Error(Errc::InvalidArgument, "object and waypoint counts must be positive");
  }
  if (!(room_extents.array() > 0.0).all()) {
    throw Error(Errc::InvalidArgument, "room extents must be positive");
  }
  if (!(object_size_min > 0.0) || object_size_max < object_size_min) {
    throw Error(Errc::InvalidArgument, "object size range is empty or non-positive");
  }
  if (!(camera_height > 0.0) || camera_height >= room_extents.z()) {
    throw Error(Errc::InvalidArgument, "camera height must lie inside the room");
  }
  if (depth_noise_sigma < 0.0) {
    throw Error(Errc::InvalidArgument, "depth noise sigma must be non-negative");
  }
}

void render_synthetic_frame(const SceneTruth& truth, const Vec3& room_extents,
                            const Intrinsics& intr, Frame& frame) {
  const AxisFrame axes = axis_frame(heading_of_pose(frame.pose));
  const Vec3 camera = frame.pose.position;
  const int w = intr.width;
  const int h = intr.height;

  frame.depth.width = w;
  frame.depth.height = h;
  frame.depth.data.assign(static_cast<std::size_t>(w) * h, 0.0f);
  frame.detections.clear();

  // Background: distance to the room shell.
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      frame.depth.at(u, v) =
          static_cast<float>(room_exit_depth(camera, axes, room_extents, u, v, intr));
    }
  }

  const int n = static_cast<int>(truth.objects.size());
  std::vector<CameraBox> cboxes(n);
  std::vector<int> paint_order;
  for (int k = 0; k < n; ++k) {
    cboxes[k] = camera_box(truth.objects[k].box, axes, camera);
    if (cboxes[k].z0 > kNearPlane) paint_order.push_back(k);
  }
  // Far to near, so nearer boxes overwrite.
  std::stable_sort(paint_order.begin(), paint_order.end(),
                   [&](int a, int b) { return cboxes[a].z0 > cboxes[b].z0; });

  std::vector<int> owner(static_cast<std::size_t>(w) * h, -1);
  for (int k : paint_order) {
    const Rect rect = clip_rect(front_rect(cboxes[k], intr), intr);
    if (rect.empty()) continue;
    int u0, u1, v0, v1;
    pixel_range(rect.u0, rect.u1, u0, u1);
    pixel_range(rect.v0, rect.v1, v0, v1);
    const float depth = static_cast<float>(cboxes[k].z0);
    for (int v = v0; v < v1; ++v) {
      for (int u = u0; u < u1; ++u) {
        frame.depth.at(u, v) = depth;
        owner[static_cast<std::size_t>(v) * w + u] = k;
      }
    }
  }

  // Emit a detection only when it is analytically exact: front plane ahead
  // of the camera, box center inside the image and unoccluded, and every
  // pixel of the projected 8-corner bbox owned by this object.
  for (int k = 0; k < n; ++k) {
    const CameraBox& cb = cboxes[k];
    if (!(cb.z0 > kNearPlane)) continue;
    const Vec3 center = truth.objects[k].box.center();
    const double zc = 0.5 * (cb.z0 + cb.z1);
    const double uc = intr.cx + intr.fx * (0.5 * (cb.x0 + cb.x1)) / zc;
    const double vc = intr.cy + intr.fy * (0.5 * (cb.y0 + cb.y1)) / zc;
    if (uc < 0.0 || uc >= w || vc < 0.0 || vc >= h) continue;
    bool occluded = false;
    for (int o = 0; o < n && !occluded; ++o) {
      if (o != k && segment_hits_box(camera, center, truth.objects[o].box)) occluded = true;
    }
    if (occluded) continue;
    const Rect bbox = clip_rect(corner_bbox(cb, intr), intr);
    if (bbox.empty()) continue;
    int u0, u1, v0, v1;
    pixel_range(bbox.u0, bbox.u1, u0, u1);
    pixel_range(bbox.v0, bbox.v1, v0, v1);
    if (u0 >= u1 || v0 >= v1) continue;
    bool pure = true;
    for (int v = v0; v < v1 && pure; ++v) {
      for (int u = u0; u < u1; ++u) {
        if (owner[static_cast<std::size_t>(v) * w + u] != k) {
          pure = false;
          break;
        }
      }
    }
    if (!pure) continue;
    frame.detections.push_back(Detection{frame.pose.frame_id, truth.objects[k].label, 1.0,
                                         PixelBBox{bbox.u0, bbox.v0, bbox.u1, bbox.v1}});
  }
}

namespace {

SceneTruth place_objects(const SyntheticConfig& cfg, const std::vector<std::string>& labels,
                         Rng& rng) {
  SceneTruth truth;
  truth.scene_id = "synthetic-" + std::to_string(cfg.seed);
  for (int i = 0; i < cfg.object_count; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const double sx = rng.uniform(cfg.object_size_min, cfg.object_size_max);
      const double sy = rng.uniform(cfg.object_size_min, cfg.object_size_max);
      const double sz = rng.uniform(cfg.object_size_min, cfg.object_size_max);
      // The camera height must cut through every box so that a level,
      // head-on vantage exists.
      const double z0 = cfg.camera_height - sz * rng.uniform(0.3, 0.7);
      if (z0 < 0.1 || z0 + sz > cfg.room_extents.z() - 0.1) continue;
      const double lo_x = kWallMargin + sx / 2;
      const double hi_x = cfg.room_extents.x() - kWallMargin - sx / 2;
      const double lo_y = kWallMargin + sy / 2;
      const double hi_y = cfg.room_extents.y() - kWallMargin - sy / 2;
      if (lo_x >= hi_x || lo_y >= hi_y) continue;
      const double cx = rng.uniform(lo_x, hi_x);
      const double cy = rng.uniform(lo_y, hi_y);
      AABB3 box;
      box.min = Vec3(cx - sx / 2, cy - sy / 2, z0);
      box.max = Vec3(cx + sx / 2, cy + sy / 2, z0 + sz);
      AABB3 inflated;
      inflated.min = box.min - Vec3::Constant(kObjectGap);
      inflated.max = box.max + Vec3::Constant(kObjectGap);
      bool overlaps = false;
      for (const SceneObject& other : truth.objects) {
        if (inflated.intersects(other.box)) {
          overlaps = true;
          break;
        }
      }
      if (overlaps) continue;
      char id[32];
      std::snprintf(id, sizeof(id), "obj-%03d", i);
      truth.objects.push_back(SceneObject{id, labels[i], box});
      placed = true;
    }
    if (!placed) {
      throw Error(Errc::PlacementFailure,
                  "could not place object " + std::to_string(i) + " after " +
                      std::to_string(kPlacementAttempts) + " attempts");
    }
  }
  return truth;
}

bool camera_position_free(const Vec3& cam, const SceneTruth& truth, const Vec3& room) {
  for (int i = 0; i < 3; ++i) {
    if (cam[i] < kCameraMargin || cam[i] > room[i] - kCameraMargin) return false;
  }
  for (const SceneObject& obj : truth.objects) {
    AABB3 inflated;
    inflated.min = obj.box.min - Vec3::Constant(0.15);
    inflated.max = obj.box.max + Vec3::Constant(0.15);
    if (inflated.contains(cam)) return false;
  }
  return true;
}

// Cheap analytic check that object `k` will be emitted by the renderer for
// this camera. Slightly stricter than the renderer (any other projected
// rect overlapping the bbox rejects the vantage, nearer or not).
bool vantage_sees_target(const SceneTruth& truth, int k, const Vec3& camera, int heading,
                         const Intrinsics& intr) {
  const AxisFrame axes = axis_frame(heading);
  const int n = static_cast<int>(truth.objects.size());
  const CameraBox cb = camera_box(truth.objects[k].box, axes, camera);
  if (!(cb.z0 > kNearPlane)) return false;

  const double zc = 0.5 * (cb.z0 + cb.z1);
  const double uc = intr.cx + intr.fx * (0.5 * (cb.x0 + cb.x1)) / zc;
  const double vc = intr.cy + intr.fy * (0.5 * (cb.y0 + cb.y1)) / zc;
  if (uc < 0.0 || uc >= intr.width || vc < 0.0 || vc >= intr.height) return false;

  const Vec3 center = truth.objects[k].box.center();
  for (int o = 0; o < n; ++o) {
    if (o != k && segment_hits_box(camera, center, truth.objects[o].box)) return false;
  }

  const Rect bbox = clip_rect(corner_bbox(cb, intr), intr);
  if (bbox.empty()) return false;
  const Rect rect = clip_rect(front_rect(cb, intr), intr);
  int u0, u1, v0, v1;
  pixel_range(bbox.u0, bbox.u1, u0, u1);
  pixel_range(bbox.v0, bbox.v1, v0, v1);
  if (u0 >= u1 || v0 >= v1) return false;
  if (!pixel_ranges_equal(bbox, rect)) return false;

  for (int o = 0; o < n; ++o) {
    if (o == k) continue;
    const CameraBox ob = camera_box(truth.objects[o].box, axes, camera);
    if (!(ob.z0 > kNearPlane)) continue;
    const Rect orect = clip_rect(front_rect(ob, intr), intr);
    if (orect.empty()) continue;
    if (pixel_ranges_intersect(orect, bbox)) return false;
  }
  return true;
}

}  // namespace

SyntheticScene generate_synthetic(const SyntheticConfig& config) {
  config.validate();

  const auto& vocab = household_vocabulary();
  Rng rng(config.seed);

  // Labels drawn without replacement while they last.
  std::vector<int> perm(vocab.size());
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = static_cast<int>(perm.size()) - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
  }
  std::vector<std::string> labels(config.object_count);
  for (int i = 0; i < config.object_count; ++i) {
    labels[i] = vocab[perm[i % vocab.size()]];
  }

  std::string last_failure;
  for (int scene_attempt = 0; scene_attempt < kSceneAttempts; ++scene_attempt) {
    SceneTruth truth;
    try {
      truth = place_objects(config, labels, rng);
    } catch (const Error& e) {
      last_failure = e.what();
      continue;
    }

    SyntheticScene scene;
    scene.truth = truth;
    scene.trajectory.intrinsics = config.intrinsics;

    bool scene_ok = true;
    for (int wpt = 0; wpt < config.waypoint_count && scene_ok; ++wpt) {
      const int target = wpt % config.object_count;
      const AABB3& box = truth.objects[target].box;
      bool accepted = false;
      for (int attempt = 0; attempt < kVantageAttempts && !accepted; ++attempt) {
        const int heading = rng.uniform_int(4);
        const AxisFrame axes = axis_frame(heading);

        // Head-on vantage: the optical axis passes through the box interior,
        // so the 8-corner bbox collapses to the front-face rectangle.
        const double lat_lo = axis_interval_lo(axes.right, box, Vec3::Zero());
        const double lat_hi = axis_interval_hi(axes.right, box, Vec3::Zero());
        const double lat = rng.uniform(lat_lo + 0.2 * (lat_hi - lat_lo),
                                       lat_hi - 0.2 * (lat_hi - lat_lo));
        const double face_plane = -axis_interval_hi(-axes.forward, box, Vec3::Zero());

        // Distance at which the whole front face fits inside the image.
        const double max_x = std::max(lat - lat_lo, lat_hi - lat);
        const double max_y = std::max(config.camera_height - box.min.z(),
                                      box.max.z() - config.camera_height);
        const double d_min =
            1.02 * std::max({config.intrinsics.fx * max_x / (config.intrinsics.cx - 2.0),
                             config.intrinsics.fy * max_y / (config.intrinsics.cy - 2.0), 0.25});
        const double d = rng.uniform(d_min, d_min + 1.5);

        Vec3 camera = axes.right * lat + axes.forward * (face_plane - d);
        camera.z() = config.camera_height;
        if (!camera_position_free(camera, truth, config.room_extents)) continue;
        if (!vantage_sees_target(truth, target, camera, heading, config.intrinsics)) continue;

        Frame frame;
        frame.pose.position = camera;
        frame.pose.orientation = axis_heading(heading);
        frame.pose.frame_id = wpt;
        frame.pose.timestamp = 0.5 * wpt;
        render_synthetic_frame(truth, config.room_extents, config.intrinsics, frame);

        bool target_detected = false;
        for (const Detection& det : frame.detections) {
          if (det.label == truth.objects[target].label) {
            target_detected = true;
            break;
          }
        }
        if (!target_detected) continue;

        scene.trajectory.frames.push_back(std::move(frame));
        accepted = true;
      }
      if (!accepted) {
        last_failure = "no valid vantage for object " + std::to_string(target);
        scene_ok = false;
      }
    }
    if (!scene_ok) continue;

    // Depth noise, applied after detections so bounding boxes stay exact.
    if (config.depth_noise_sigma > 0.0) {
      for (Frame& frame : scene.trajectory.frames) {
        std::uint64_t state = config.seed * 0x9e3779b97f4a7c15ULL +
                              static_cast<std::uint64_t>(frame.pose.frame_id);
        Rng noise(splitmix64(state));
        for (float& z : frame.depth.data) {
          z += static_cast<float>(config.depth_noise_sigma * noise.gaussian());
        }
      }
    }

    for (int i = 0; i < config.object_count; ++i) {
      char id[32];
      std::snprintf(id, sizeof(id), "explicit-%03d", i);
      Query q;
      q.query_id = id;
      q.type = QueryType::Explicit;
      q.text = "go to the " + truth.objects[i].label;
      q.plausible_labels = {truth.objects[i].label};
      scene.queries.push_back(std::move(q));
    }
    return scene;
  }

  throw Error(Errc::PlacementFailure, last_failure.empty() ? "scene generation failed"
                                                           : last_failure);
}

}  // namespace cartier
