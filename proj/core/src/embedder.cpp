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

#include "cartier/embedder.hpp"

#include <cmath>

#include "cartier/error.hpp"

namespace cartier {

namespace {

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Eigen::MatrixXf Embedder::embed_pixels(const Frame&) const {
  throw Error(Errc::EmbedderLacksPixelCapability,
              identity() + " cannot produce per-pixel embeddings");
}

TestEmbedder::TestEmbedder(int dimension) : dimension_(dimension) {
  if (dimension_ < 2) {
    throw Error(Errc::InvalidArgument, "embedding dimension must be at least 2");
  }
}

std::string TestEmbedder::identity() const {
  return "test-embedder/v1/d" + std::to_string(dimension_);
}

const Eigen::VectorXd& TestEmbedder::cached_embedding(const std::string& normalized) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = cache_.find(normalized);
  if (it != cache_.end()) return it->second;

  // Deterministic unit vector: hash seeds a splitmix stream, Box-Muller
  // turns it into gaussians.
  std::uint64_t state = fnv1a64(normalized);
  Eigen::VectorXd vec(dimension_);
  for (int i = 0; i < dimension_; ++i) {
    double u1 = (splitmix64(state) >> 11) * 0x1.0p-53;
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = (splitmix64(state) >> 11) * 0x1.0p-53;
    vec[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
  vec.normalize();
  return cache_.emplace(normalized, std::move(vec)).first->second;
}

Eigen::VectorXd TestEmbedder::embed_text(std::string_view text) const {
  return cached_embedding(normalize_label(text));
}

Eigen::MatrixXf TestEmbedder::embed_pixels(const Frame& frame) const {
  const int w = frame.depth.width;
  const int h = frame.depth.height;
  Eigen::MatrixXf out(static_cast<Eigen::Index>(w) * h, dimension_);

  const Eigen::VectorXf background = cached_embedding("background").cast<float>();
  std::vector<Eigen::VectorXf> det_vecs;
  det_vecs.reserve(frame.detections.size());
  for (const Detection& det : frame.detections) {
    det_vecs.push_back(cached_embedding(normalize_label(det.label)).cast<float>());
  }

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Eigen::Index row = static_cast<Eigen::Index>(v) * w + u;
      const Eigen::VectorXf* vec = &background;
      for (std::size_t d = 0; d < frame.detections.size(); ++d) {
        if (frame.detections[d].bbox.contains(u, v)) {
          vec = &det_vecs[d];
          break;
        }
      }
      out.row(row) = vec->transpose();
    }
  }
  return out;
}

}  // namespace cartier
