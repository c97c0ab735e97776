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

#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include <Eigen/Core>

#include "cartier/dataset.hpp"

namespace cartier {

/// Text (and optionally per-pixel) embedding model. Implementations must be
/// deterministic: the same input always yields the same vector. The
/// identity tag is stored inside embedding grids so queries can detect a
/// model mismatch.
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::string identity() const = 0;
  virtual int dimension() const = 0;
  virtual Eigen::VectorXd embed_text(std::string_view text) const = 0;

  virtual bool supports_pixel_embeddings() const { return false; }

  /// Per-pixel embeddings for one frame, (width*height) rows in pixel order
  /// v*width+u, `dimension()` columns. The default implementation throws
  /// EmbedderLacksPixelCapability.
  virtual Eigen::MatrixXf embed_pixels(const Frame& frame) const;
};

/// Deterministic stand-in for a real vision-language embedder, used by the
/// self-contained tests and the synthetic pipeline. Text maps to a unit
/// vector derived from a hash of the normalized string; a pixel maps to the
/// embedding of the label of the first detection whose bbox contains it,
/// or of "background" otherwise. Label text and pixels of that label
/// therefore embed identically.
class TestEmbedder final : public Embedder {
 public:
  explicit TestEmbedder(int dimension = 32);

  std::string identity() const override;
  int dimension() const override { return dimension_; }
  Eigen::VectorXd embed_text(std::string_view text) const override;
  bool supports_pixel_embeddings() const override { return true; }
  Eigen::MatrixXf embed_pixels(const Frame& frame) const override;

 private:
  const Eigen::VectorXd& cached_embedding(const std::string& normalized) const;

  int dimension_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, Eigen::VectorXd> cache_;
};

}  // namespace cartier
