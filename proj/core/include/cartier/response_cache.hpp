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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

namespace cartier {

/// Persistent LLM request/response log keyed by (backend identity,
/// template id, prompt). The on-disk form is an append-only JSONL file of
/// {key, identity, template_id, prompt, response} records, so recorded runs
/// replay byte-exactly without network access. Reads are concurrent;
/// writes are serialized.
class ResponseCache {
 public:
  ResponseCache() = default;  // in-memory only
  explicit ResponseCache(std::filesystem::path file);  // loads if present, appends on put

  static std::uint64_t make_key(std::string_view identity, std::string_view template_id,
                                std::string_view prompt);

  std::optional<std::string> get(std::string_view identity, std::string_view template_id,
                                 std::string_view prompt) const;
  void put(std::string_view identity, std::string_view template_id, std::string_view prompt,
           std::string_view response);

  std::size_t size() const;

 private:
  std::filesystem::path file_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, std::string> entries_;
};

}  // namespace cartier
