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

#include <benchmark/benchmark.h>

#include "cartier/geometry.hpp"

namespace {

using namespace cartier;

const Intrinsics kIntr{200.0, 200.0, 320.0, 240.0, 640, 480};

void BM_Backproject(benchmark::State& state) {
  double u = 10.0, v = 17.0, z = 2.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(backproject(u, v, z, kIntr));
    u = u < 600 ? u + 1 : 10;
  }
}
BENCHMARK(BM_Backproject);

void BM_CameraToWorld(benchmark::State& state) {
  Pose pose;
  pose.position = Vec3(1, 2, 3);
  pose.orientation = Quat(0.5, 0.5, 0.5, 0.5);
  CameraPoint p{Vec3(0.3, -0.2, 2.5)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(camera_to_world(p, pose));
  }
}
BENCHMARK(BM_CameraToWorld);

void BM_PointToAabbDistance(benchmark::State& state) {
  const AABB3 box{Vec3(0, 0, 0), Vec3(1, 2, 1)};
  WorldPoint p{Vec3(3, -1, 0.5)};
  for (auto _ : state) {
    benchmark::DoNotOptimize(point_to_aabb_distance(p, box));
    p.p.x() = p.p.x() > 10 ? -10 : p.p.x() + 0.01;
  }
}
BENCHMARK(BM_PointToAabbDistance);

void BM_BBoxViewAngle(benchmark::State& state) {
  const PixelBBox bbox{450, 100, 520, 180};
  for (auto _ : state) {
    benchmark::DoNotOptimize(bbox_view_angle(bbox, kIntr));
  }
}
BENCHMARK(BM_BBoxViewAngle);

}  // namespace
