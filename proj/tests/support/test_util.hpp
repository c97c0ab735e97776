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

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>

#include "cartier/dataset.hpp"
#include "cartier/error.hpp"
#include "cartier/geometry.hpp"

namespace cartier::testing {

// Deterministic generator for randomized test cases, independent of the
// library's RNG choices.
class TestRng {
 public:
  explicit TestRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double uniform() { return (next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
  double gaussian() {
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * uniform());
  }

  Vec3 vec3(double lo, double hi) { return Vec3(uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)); }

  Quat unit_quaternion() {
    Quat q(gaussian(), gaussian(), gaussian(), gaussian());
    q.normalize();
    return q;
  }

  AABB3 aabb(double center_range = 5.0, double max_extent = 4.0) {
    const Vec3 lo = vec3(-center_range, center_range);
    const Vec3 extent(uniform(0.1, max_extent), uniform(0.1, max_extent),
                      uniform(0.1, max_extent));
    return AABB3{lo, lo + extent};
  }

 private:
  std::uint64_t state_;
};

// Independent distance oracle: coarse-to-fine search over dense samplings
// of the six box faces. Never uses the clamp formula under test.
inline double surface_sampling_distance(const WorldPoint& p, const AABB3& box) {
  if (box.contains(p.p)) return 0.0;

  double best = std::numeric_limits<double>::infinity();
  constexpr int kGrid = 16;
  constexpr int kIterations = 12;

  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const double fixed = side == 0 ? box.min[axis] : box.max[axis];
      const int b = (axis + 1) % 3;
      const int c = (axis + 2) % 3;
      double lo_b = box.min[b], hi_b = box.max[b];
      double lo_c = box.min[c], hi_c = box.max[c];
      for (int iter = 0; iter < kIterations; ++iter) {
        const double step_b = (hi_b - lo_b) / kGrid;
        const double step_c = (hi_c - lo_c) / kGrid;
        double face_best = std::numeric_limits<double>::infinity();
        double arg_b = lo_b, arg_c = lo_c;
        for (int i = 0; i <= kGrid; ++i) {
          for (int j = 0; j <= kGrid; ++j) {
            Vec3 q;
            q[axis] = fixed;
            q[b] = lo_b + i * step_b;
            q[c] = lo_c + j * step_c;
            const double d = (p.p - q).norm();
            if (d < face_best) {
              face_best = d;
              arg_b = q[b];
              arg_c = q[c];
            }
          }
        }
        best = std::min(best, face_best);
        lo_b = std::max(box.min[b], arg_b - step_b);
        hi_b = std::min(box.max[b], arg_b + step_b);
        lo_c = std::max(box.min[c], arg_c - step_c);
        hi_c = std::min(box.max[c], arg_c + step_c);
      }
    }
  }
  return best;
}

// Distance from a point to the box SURFACE (not the solid): positive both
// outside and strictly inside.
inline double surface_distance(const Vec3& p, const AABB3& box) {
  const double outside = point_to_aabb_distance(WorldPoint{p}, box);
  if (outside > 0.0) return outside;
  double inside = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    inside = std::min(inside, std::min(p[i] - box.min[i], box.max[i] - p[i]));
  }
  return inside;
}

// Code of the Error thrown by f, or nullopt when it does not throw.
inline std::optional<Errc> thrown_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Fresh directory under the system temp root, removed on destruction.
class ScopedTempDir {
 public:
  explicit ScopedTempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cartier-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~ScopedTempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScopedTempDir(const ScopedTempDir&) = delete;
  ScopedTempDir& operator=(const ScopedTempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace cartier::testing
