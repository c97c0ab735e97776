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

#include "cartier/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

namespace cartier {

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + 1)) {
    ++count;
  }
  return count;
}

void replace_once(std::string& text, std::string_view placeholder, std::string_view value) {
  const std::size_t pos = text.find(placeholder);
  text.replace(pos, placeholder.size(), value);
}

bool is_word_char(char c) {
  const unsigned char u = static_cast<unsigned char>(c);
  return u < 128 && std::isalnum(u) != 0;
}

}  // namespace

PromptTemplate make_prompt_template(std::string text, std::string template_id) {
  if (count_occurrences(text, "{objects}") != 1 || count_occurrences(text, "{query}") != 1) {
    throw Error(Errc::InvalidArgument,
                "template must contain {objects} and {query} exactly once (" + template_id + ")");
  }
  return PromptTemplate{std::move(text), std::move(template_id)};
}

PromptTemplate load_prompt_template(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::MissingFile, path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  return make_prompt_template(std::move(text), path.stem().string());
}

const PromptTemplate& default_prompt_template() {
  static const PromptTemplate kDefault = make_prompt_template(
      "You are helping a mobile robot choose a navigation target. The robot has detected "
      "the following objects in its environment: {objects}. A user says: \"{query}\". "
      "Reply with the single object from the list that the robot should navigate to in "
      "order to help the user.",
      "default-v1");
  return kDefault;
}

std::string build_prompt(const PromptTemplate& tmpl, const std::vector<std::string>& vocabulary,
                         std::string_view query) {
  if (vocabulary.empty()) {
    throw Error(Errc::EmptyVocabulary, "prompt needs at least one detected object");
  }
  if (query.empty()) {
    throw Error(Errc::EmptyQuery, "prompt needs a user query");
  }

  std::string object_list;
  std::unordered_set<std::string> seen;
  for (const std::string& label : vocabulary) {
    if (!seen.insert(normalize_label(label)).second) continue;  // each object type once
    if (!object_list.empty()) object_list += ", ";
    object_list += label;
  }

  std::string prompt = tmpl.text;
  replace_once(prompt, "{objects}", object_list);
  replace_once(prompt, "{query}", query);
  return prompt;
}

CompletionMode completion_mode_from_string(std::string_view s) {
  if (s == "live") return CompletionMode::Live;
  if (s == "record") return CompletionMode::Record;
  if (s == "replay") return CompletionMode::Replay;
  throw Error(Errc::InvalidArgument, "unknown completion mode: " + std::string(s));
}

std::string complete(LlmBackend& backend, const std::string& prompt, const LlmParams& params,
                     ResponseCache* cache, CompletionMode mode,
                     const std::string& template_id) {
  if (mode == CompletionMode::Replay) {
    if (cache == nullptr) {
      throw Error(Errc::CacheMiss, "replay mode requires a response cache");
    }
    auto hit = cache->get(backend.identity(), template_id, prompt);
    if (!hit) {
      throw Error(Errc::CacheMiss, "no recorded response for this prompt under " +
                                       backend.identity() + "/" + template_id);
    }
    return *hit;
  }

  std::string response;
  int backoff_ms = params.initial_backoff_ms;
  for (int attempt = 1;; ++attempt) {
    try {
      response = backend.complete(prompt, params);
      break;
    } catch (const Error& e) {
      if (e.code() != Errc::NetworkError || attempt >= params.max_attempts) throw;
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms = std::min(backoff_ms * 2, params.max_backoff_ms);
    }
  }

  if (mode == CompletionMode::Record && cache != nullptr) {
    cache->put(backend.identity(), template_id, prompt, response);
  }
  return response;
}

std::string parse_object(std::string_view response, const std::vector<std::string>& vocabulary) {
  if (vocabulary.empty()) {
    throw Error(Errc::EmptyVocabulary, "cannot parse against an empty vocabulary");
  }
  const std::string haystack = normalize_label(response);

  // end position of the last word-boundary occurrence per label
  std::ptrdiff_t best_end = -1;
  std::size_t best_len = 0;
  std::string best_key;
  const std::string* best_label = nullptr;

  for (const std::string& label : vocabulary) {
    const std::string needle = normalize_label(label);
    if (needle.empty()) continue;
    std::ptrdiff_t last_end = -1;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos;
         pos = haystack.find(needle, pos + 1)) {
      const std::size_t end = pos + needle.size();
      const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
      const bool right_ok = end == haystack.size() || !is_word_char(haystack[end]);
      if (left_ok && right_ok) last_end = static_cast<std::ptrdiff_t>(end);
    }
    if (last_end < 0) continue;
    const bool wins =
        last_end > best_end ||
        (last_end == best_end && (needle.size() > best_len ||
                                  (needle.size() == best_len && needle < best_key)));
    if (wins) {
      best_end = last_end;
      best_len = needle.size();
      best_key = needle;
      best_label = &label;
    }
  }

  if (best_label == nullptr) {
    throw Error(Errc::NoMatch, "no vocabulary label found in response: \"" +
                                   std::string(response) + "\"");
  }
  return *best_label;
}

namespace {

std::string grounded_label(const std::vector<std::string>& vocabulary, std::string_view query,
                           const GroundingContext& ctx, std::string& prompt_out,
                           std::string& response_out) {
  prompt_out = build_prompt(ctx.prompt_template, vocabulary, query);
  response_out = complete(*ctx.backend, prompt_out, ctx.params, ctx.cache, ctx.mode,
                          ctx.prompt_template.template_id);
  return parse_object(response_out, vocabulary);
}

}  // namespace

GroundingResult ground_query(const std::vector<std::string>& vocabulary, std::string_view query,
                             const GroundingContext& ctx, const ObjectIndex& index) {
  GroundingResult result;
  result.label = grounded_label(vocabulary, query, ctx, result.prompt, result.response);
  result.point = lookup(index, result.label).point;
  return result;
}

GroundingResult ground_query(const std::vector<std::string>& vocabulary, std::string_view query,
                             const GroundingContext& ctx, const EmbeddingGrid& grid,
                             const Embedder& embedder) {
  GroundingResult result;
  result.label = grounded_label(vocabulary, query, ctx, result.prompt, result.response);
  result.point = lookup(grid, result.label, embedder);
  return result;
}

}  // namespace cartier
