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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cartier/llm_backend.hpp"
#include "cartier/response_cache.hpp"
#include "cartier/spatial_index.hpp"

namespace cartier {

/// Prompt template with {objects} and {query} placeholders, each required
/// exactly once. template_id feeds the response-cache key.
struct PromptTemplate {
  std::string text;
  std::string template_id;
};

/// Validates placeholder structure; throws InvalidArgument.
PromptTemplate make_prompt_template(std::string text, std::string template_id);
PromptTemplate load_prompt_template(const std::filesystem::path& path);
const PromptTemplate& default_prompt_template();

/// Substitutes the comma-separated deduplicated vocabulary (first-seen
/// order) for {objects} and the query verbatim for {query}.
std::string build_prompt(const PromptTemplate& tmpl, const std::vector<std::string>& vocabulary,
                         std::string_view query);

enum class CompletionMode { Live, Record, Replay };

CompletionMode completion_mode_from_string(std::string_view s);

/// One completion under the chosen mode. Live and Record call the backend
/// (Record also persists the response); Replay serves the cache only and
/// throws CacheMiss on an unseen prompt. NetworkError is retried with
/// capped exponential backoff per params, then surfaced.
std::string complete(LlmBackend& backend, const std::string& prompt, const LlmParams& params,
                     ResponseCache* cache, CompletionMode mode,
                     const std::string& template_id);

/// Extracts the chosen vocabulary label from a model response:
/// case-insensitive word-boundary search, keeping the label whose last
/// occurrence ends latest (answers typically name the choice at the end);
/// ties go to the longer label. Underscores, hyphens and spaces are
/// interchangeable. Throws NoMatch when no label occurs.
std::string parse_object(std::string_view response, const std::vector<std::string>& vocabulary);

struct GroundingContext {
  PromptTemplate prompt_template;
  LlmBackend* backend{nullptr};
  LlmParams params;
  ResponseCache* cache{nullptr};
  CompletionMode mode{CompletionMode::Live};
};

struct GroundingResult {
  std::string label;
  WorldPoint point;
  std::string prompt;
  std::string response;
};

/// The full query pipeline: build_prompt -> complete -> parse_object ->
/// index lookup. Constituent errors propagate.
GroundingResult ground_query(const std::vector<std::string>& vocabulary, std::string_view query,
                             const GroundingContext& ctx, const ObjectIndex& index);
GroundingResult ground_query(const std::vector<std::string>& vocabulary, std::string_view query,
                             const GroundingContext& ctx, const EmbeddingGrid& grid,
                             const Embedder& embedder);

}  // namespace cartier
