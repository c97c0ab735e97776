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

#include <stdexcept>
#include <string>
#include <string_view>

namespace cartier {

enum class Errc {
  // geometry
  NonPositiveDepth,
  PixelOutOfBounds,
  UnnormalizedQuaternion,
  // dataset
  MissingFile,
  ManifestMismatch,
  MalformedRecord,
  UnknownPlausibleLabel,
  InvalidQueryType,
  PlacementFailure,
  // spatial index
  NoValidDepth,
  EmbedderLacksPixelCapability,
  EmbedderMismatch,
  EmptyGrid,
  LabelNotIndexed,
  // grounding
  EmptyVocabulary,
  EmptyQuery,
  NetworkError,
  RateLimited,
  AuthFailure,
  CacheMiss,
  NoMatch,
  // evaluation
  NoSurvivingProposals,
  // generic misuse of an API contract
  InvalidArgument,
};

std::string_view to_string(Errc code);

/// All library failures are reported as a single exception type carrying a
/// machine-checkable code plus a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cartier
