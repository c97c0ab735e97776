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

#include "cartier/spatial_index.hpp"
#include "cartier/synthetic.hpp"

namespace {

using namespace cartier;

const SyntheticScene& scene() {
  static const SyntheticScene kScene = [] {
    SyntheticConfig config;
    config.seed = 77;
    config.object_count = 8;
    config.waypoint_count = 16;
    return generate_synthetic(config);
  }();
  return kScene;
}

void BM_GenerateSynthetic(benchmark::State& state) {
  SyntheticConfig config;
  config.seed = 77;
  config.object_count = static_cast<int>(state.range(0));
  config.waypoint_count = 2 * config.object_count;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_synthetic(config));
  }
}
BENCHMARK(BM_GenerateSynthetic)->Arg(4)->Arg(8);

void BM_BuildObjectDepth(benchmark::State& state) {
  const Trajectory& traj = scene().trajectory;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_object_depth(traj));
  }
}
BENCHMARK(BM_BuildObjectDepth);

void BM_BuildObjectViewpoint(benchmark::State& state) {
  const Trajectory& traj = scene().trajectory;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_object_viewpoint(traj, 0.8, true));
  }
}
BENCHMARK(BM_BuildObjectViewpoint);

void BM_AccumulateGrid(benchmark::State& state) {
  const Trajectory& traj = scene().trajectory;
  const TestEmbedder embedder(32);
  for (auto _ : state) {
    benchmark::DoNotOptimize(accumulate_grid(traj, embedder, 0.1));
  }
}
BENCHMARK(BM_AccumulateGrid);

void BM_QueryGrid(benchmark::State& state) {
  const TestEmbedder embedder(32);
  const EmbeddingGrid grid = accumulate_grid(scene().trajectory, embedder, 0.1);
  const std::string label = scene().truth.objects[0].label;
  for (auto _ : state) {
    benchmark::DoNotOptimize(query_grid(grid, label, embedder));
  }
}
BENCHMARK(BM_QueryGrid);

}  // namespace
