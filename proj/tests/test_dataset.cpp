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

#include <doctest.h>

#include <cstring>
#include <fstream>

#include "cartier/dataset.hpp"
#include "support/test_util.hpp"

using namespace cartier;
using cartier::testing::ScopedTempDir;
using cartier::testing::TestRng;
using cartier::testing::thrown_code;

namespace {

DepthImage make_depth(int w, int h, float value) {
  DepthImage img;
  img.width = w;
  img.height = h;
  img.data.assign(static_cast<std::size_t>(w) * h, value);
  return img;
}

// Two frames, two detections, no depth features: enough to exercise the
// directory layout end to end.
Trajectory small_trajectory() {
  Trajectory traj;
  traj.intrinsics = Intrinsics{60.0, 60.0, 16.0, 12.0, 32, 24};
  for (int i = 0; i < 2; ++i) {
    Frame frame;
    frame.pose.frame_id = i;
    frame.pose.timestamp = 0.5 * i;
    frame.pose.position = Vec3(0.25 * i, -0.5, 1.5);
    frame.pose.orientation = Quat(1, 0, 0, 0);
    frame.depth = make_depth(32, 24, 2.0f + i);
    traj.frames.push_back(std::move(frame));
  }
  traj.frames[0].detections.push_back(Detection{0, "sofa", 0.95, PixelBBox{1, 1, 9, 7}});
  traj.frames[1].detections.push_back(Detection{1, "mug", 0.85, PixelBBox{10, 5, 20, 15}});
  return traj;
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("normalize_label folds case and separators") {
  CHECK(normalize_label("Trash_Can") == "trash can");
  CHECK(normalize_label("trash-can") == "trash can");
  CHECK(normalize_label("  Coffee   Machine ") == "coffee machine");
  CHECK(normalize_label("BED") == "bed");
  CHECK(normalize_label("") == "");
}

TEST_CASE("depth files round-trip bit-exactly") {
  ScopedTempDir tmp("cdpt");
  DepthImage img = make_depth(7, 5, 0.0f);
  TestRng rng(21);
  for (float& z : img.data) {
    z = static_cast<float>(rng.uniform(-1.0, 8.0));
  }
  img.data[3] = std::numeric_limits<float>::quiet_NaN();
  img.data[4] = -0.0f;
  img.data[5] = 0.0f;

  const auto path = tmp.path() / "d.cdpt";
  write_depth(img, path);
  const DepthImage loaded = read_depth(path);
  REQUIRE(loaded.width == img.width);
  REQUIRE(loaded.height == img.height);
  CHECK(std::memcmp(loaded.data.data(), img.data.data(), img.data.size() * 4) == 0);

  // invalid sentinels preserved, and classified as invalid
  CHECK(!DepthImage::is_valid(loaded.data[3]));
  CHECK(!DepthImage::is_valid(loaded.data[4]));
  CHECK(!DepthImage::is_valid(loaded.data[5]));
}

TEST_CASE("depth reader rejects corrupt files") {
  ScopedTempDir tmp("cdpt-bad");
  const auto path = tmp.path() / "bad.cdpt";
  std::ofstream(path, std::ios::binary) << "XXXX";
  CHECK(thrown_code([&] { read_depth(path); }) == Errc::MalformedRecord);
  CHECK(thrown_code([&] { read_depth(tmp.path() / "absent.cdpt"); }) == Errc::MissingFile);
}

TEST_CASE("trajectory save/load round trip") {
  ScopedTempDir tmp("traj");
  const Trajectory traj = small_trajectory();
  save_trajectory(traj, tmp.path());
  const Trajectory loaded = load_trajectory(tmp.path());

  REQUIRE(loaded.frames.size() == traj.frames.size());
  for (std::size_t i = 0; i < traj.frames.size(); ++i) {
    const Frame& a = traj.frames[i];
    const Frame& b = loaded.frames[i];
    CHECK(a.pose.frame_id == b.pose.frame_id);
    CHECK((a.pose.position - b.pose.position).norm() < 1e-9);
    CHECK(std::abs(a.pose.orientation.angularDistance(b.pose.orientation)) < 1e-9);
    CHECK(std::memcmp(a.depth.data.data(), b.depth.data.data(), a.depth.data.size() * 4) == 0);
    REQUIRE(a.detections.size() == b.detections.size());
    for (std::size_t d = 0; d < a.detections.size(); ++d) {
      CHECK(a.detections[d].label == b.detections[d].label);
      CHECK(a.detections[d].confidence == b.detections[d].confidence);
      CHECK(a.detections[d].bbox.xmin == b.detections[d].bbox.xmin);
      CHECK(a.detections[d].bbox.ymax == b.detections[d].bbox.ymax);
    }
  }
}

TEST_CASE("bundled tiny fixture loads with known shape") {
  const Trajectory traj = load_trajectory(std::filesystem::path(CARTIER_DATA_DIR) /
                                          "fixtures" / "tiny-trajectory");
  CHECK(traj.frames.size() == 3);
  std::size_t detections = 0;
  for (const Frame& frame : traj.frames) {
    detections += frame.detections.size();
  }
  CHECK(detections == 5);
}

TEST_CASE("manifest/depth dimension mismatch is detected") {
  ScopedTempDir tmp("mismatch");
  Trajectory traj = small_trajectory();
  traj.frames[0].detections.clear();
  traj.frames[1].detections.clear();
  save_trajectory(traj, tmp.path());

  // Re-point the manifest at a different width; the depth headers disagree.
  std::ifstream in(tmp.path() / "manifest.json");
  std::string manifest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  const auto pos = manifest.find("\"width\": 32");
  REQUIRE(pos != std::string::npos);
  manifest.replace(pos, 11, "\"width\": 31");
  std::ofstream(tmp.path() / "manifest.json") << manifest;

  CHECK(thrown_code([&] { load_trajectory(tmp.path()); }) == Errc::ManifestMismatch);
}

TEST_CASE("detection for an absent frame is malformed") {
  ScopedTempDir tmp("absent-frame");
  save_trajectory(small_trajectory(), tmp.path());
  std::ofstream(tmp.path() / "detections.jsonl", std::ios::app)
      << R"({"frame_id":99,"label":"ghost","confidence":0.9,"bbox":[0,0,5,5]})" << "\n";
  CHECK(thrown_code([&] { load_trajectory(tmp.path()); }) == Errc::MalformedRecord);
}

TEST_CASE("non-increasing frame ids are malformed") {
  ScopedTempDir tmp("order");
  save_trajectory(small_trajectory(), tmp.path());
  std::ofstream(tmp.path() / "poses.jsonl", std::ios::app)
      << R"({"frame_id":0,"timestamp":9,"position":[0,0,0],"quaternion":[1,0,0,0]})" << "\n";
  CHECK(thrown_code([&] { load_trajectory(tmp.path()); }) == Errc::MalformedRecord);
}

TEST_CASE("numeric overflow in a pose is malformed, with a line number") {
  ScopedTempDir tmp("finite");
  save_trajectory(small_trajectory(), tmp.path());
  std::ofstream(tmp.path() / "poses.jsonl", std::ios::app)
      << R"({"frame_id":9,"timestamp":9,"position":[1e999,0,0],"quaternion":[1,0,0,0]})" << "\n";
  try {
    load_trajectory(tmp.path());
    FAIL("expected MalformedRecord");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedRecord);
    CHECK(std::string(e.what()).find("poses.jsonl:3") != std::string::npos);
  }
}

TEST_CASE("missing files are reported as such") {
  ScopedTempDir tmp("missing");
  CHECK(thrown_code([&] { load_trajectory(tmp.path()); }) == Errc::MissingFile);
}

TEST_CASE("detector_vocabulary follows the strict threshold") {
  Trajectory traj;
  traj.intrinsics = Intrinsics{60.0, 60.0, 16.0, 12.0, 32, 24};
  Frame f0, f1;
  f0.pose.frame_id = 0;
  f1.pose.frame_id = 1;
  f0.depth = make_depth(32, 24, 1.0f);
  f1.depth = make_depth(32, 24, 1.0f);
  f0.detections = {Detection{0, "sofa", 0.95, PixelBBox{0, 0, 4, 4}},
                   Detection{0, "sofa", 0.90, PixelBBox{0, 0, 4, 4}}};
  f1.detections = {Detection{1, "mug", 0.81, PixelBBox{0, 0, 4, 4}}};
  traj.frames = {f0, f1};

  CHECK(detector_vocabulary(traj) == std::vector<std::string>{"sofa", "mug"});

  SUBCASE("boundary is exclusive at exactly 0.8") {
    traj.frames[1].detections[0].confidence = 0.80;
    CHECK(detector_vocabulary(traj) == std::vector<std::string>{"sofa"});
    traj.frames[1].detections[0].confidence = 0.8 + 1e-9;
    CHECK(detector_vocabulary(traj) == std::vector<std::string>{"sofa", "mug"});
  }

  SUBCASE("case-variant duplicates collapse to the first spelling") {
    traj.frames[1].detections.push_back(Detection{1, "Sofa", 0.99, PixelBBox{0, 0, 4, 4}});
    CHECK(detector_vocabulary(traj) == std::vector<std::string>{"sofa", "mug"});
  }

  SUBCASE("order within one frame does not matter") {
    traj.frames[0].detections.push_back(Detection{0, "lamp", 0.9, PixelBBox{0, 0, 4, 4}});
    const auto before = detector_vocabulary(traj);
    std::reverse(traj.frames[0].detections.begin(), traj.frames[0].detections.end());
    CHECK(detector_vocabulary(traj) == before);
  }

  SUBCASE("empty trajectory yields an empty vocabulary") {
    Trajectory empty;
    empty.intrinsics = traj.intrinsics;
    CHECK(detector_vocabulary(empty).empty());
  }
}

TEST_CASE("scene truth and query loading") {
  ScopedTempDir tmp("scene");
  SceneTruth truth;
  truth.scene_id = "s1";
  truth.objects.push_back(
      SceneObject{"a", "bed", AABB3{Vec3(0, 0, 0), Vec3(2, 2, 1)}});
  truth.objects.push_back(
      SceneObject{"b", "sofa", AABB3{Vec3(3, 3, 0), Vec3(4, 4, 1)}});
  save_scene_truth(truth, tmp.path() / "scene.json");
  const SceneTruth loaded = load_scene_truth(tmp.path() / "scene.json");
  CHECK(loaded.scene_id == "s1");
  REQUIRE(loaded.objects.size() == 2);
  CHECK(loaded.objects[1].box.max.x() == doctest::Approx(4.0));

  std::vector<Query> queries{
      Query{"q1", QueryType::Conversational, "long winding text", {"bed"}}};
  save_queries(queries, tmp.path() / "queries.json");
  const auto loaded_queries = load_queries(tmp.path() / "queries.json", loaded);
  REQUIRE(loaded_queries.size() == 1);
  CHECK(loaded_queries[0].type == QueryType::Conversational);

  SUBCASE("unknown query type is rejected") {
    std::ofstream(tmp.path() / "queries.json")
        << R"([{"query_id":"q","query_type":"rhetorical","text":"?","plausible_labels":["bed"]}])";
    CHECK(thrown_code([&] { load_queries(tmp.path() / "queries.json", loaded); }) ==
          Errc::InvalidQueryType);
  }

  SUBCASE("plausible label must exist in the scene") {
    std::ofstream(tmp.path() / "queries.json")
        << R"([{"query_id":"q","query_type":"explicit","text":"?","plausible_labels":["unicorn"]}])";
    CHECK(thrown_code([&] { load_queries(tmp.path() / "queries.json", loaded); }) ==
          Errc::UnknownPlausibleLabel);
  }

  SUBCASE("duplicate instance ids are malformed") {
    truth.objects[1].instance_id = "a";
    save_scene_truth(truth, tmp.path() / "dup.json");
    CHECK(thrown_code([&] { load_scene_truth(tmp.path() / "dup.json"); }) ==
          Errc::MalformedRecord);
  }
}

}  // TEST_SUITE
