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

#include "cartier/response_cache.hpp"

#include <fstream>
#include <mutex>

#include <nlohmann/json.hpp>

#include "cartier/error.hpp"

namespace cartier {

using nlohmann::json;

namespace {

constexpr char kFieldSeparator = '\x1f';

std::uint64_t fnv1a64_append(std::uint64_t hash, std::string_view s) {
  for (unsigned char c : s) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string key_hex(std::uint64_t key) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(key));
  return buf;
}

}  // namespace

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  if (!in) return;  // fresh cache; created on first put
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::uint64_t key =
          std::stoull(j.at("key").get<std::string>(), nullptr, 16);
      entries_[key] = j.at("response").get<std::string>();
    } catch (const std::exception& e) {
      throw Error(Errc::MalformedRecord,
                  file_.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::uint64_t ResponseCache::make_key(std::string_view identity, std::string_view template_id,
                                      std::string_view prompt) {
  std::uint64_t hash = 14695981039346656037ULL;
  hash = fnv1a64_append(hash, identity);
  hash = fnv1a64_append(hash, std::string_view(&kFieldSeparator, 1));
  hash = fnv1a64_append(hash, template_id);
  hash = fnv1a64_append(hash, std::string_view(&kFieldSeparator, 1));
  hash = fnv1a64_append(hash, prompt);
  return hash;
}

std::optional<std::string> ResponseCache::get(std::string_view identity,
                                              std::string_view template_id,
                                              std::string_view prompt) const {
  const std::uint64_t key = make_key(identity, template_id, prompt);
  std::shared_lock lock(mutex_);
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ResponseCache::put(std::string_view identity, std::string_view template_id,
                        std::string_view prompt, std::string_view response) {
  const std::uint64_t key = make_key(identity, template_id, prompt);
  std::unique_lock lock(mutex_);
  const bool fresh = entries_.emplace(key, std::string(response)).second;
  if (!fresh || file_.empty()) return;

  json j;
  j["key"] = key_hex(key);
  j["identity"] = std::string(identity);
  j["template_id"] = std::string(template_id);
  j["prompt"] = std::string(prompt);
  j["response"] = std::string(response);
  std::ofstream out(file_, std::ios::app);
  if (!out) {
    throw Error(Errc::MissingFile, "cannot append to cache: " + file_.string());
  }
  out << j.dump() << "\n";
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

}  // namespace cartier
