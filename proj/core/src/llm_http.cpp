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

#include <condition_variable>
#include <mutex>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "cartier/error.hpp"
#include "cartier/llm_backend.hpp"

namespace cartier {

namespace {

using nlohmann::json;

// Bounds the number of concurrent requests against the endpoint.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(int limit) : slots_(limit) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    cv_.wait(lock, [&] { return slots_ > 0; });
    --slots_;
  }
  void release() {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      ++slots_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int slots_;
};

struct SlotGuard {
  InFlightLimiter& limiter;
  explicit SlotGuard(InFlightLimiter& l) : limiter(l) { limiter.acquire(); }
  ~SlotGuard() { limiter.release(); }
};

// Splits "https://host:port/prefix" into the client target and path prefix.
void split_base_url(const std::string& base_url, std::string& host_part,
                    std::string& path_prefix) {
  const std::size_t scheme_end = base_url.find("://");
  const std::size_t path_start =
      base_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start == std::string::npos) {
    host_part = base_url;
    path_prefix.clear();
  } else {
    host_part = base_url.substr(0, path_start);
    path_prefix = base_url.substr(path_start);
    while (!path_prefix.empty() && path_prefix.back() == '/') path_prefix.pop_back();
  }
}

class HttpBackend final : public LlmBackend {
 public:
  explicit HttpBackend(HttpBackendConfig config)
      : config_(std::move(config)), limiter_(config_.max_in_flight) {
    if (config_.api_key.empty()) {
      throw Error(Errc::AuthFailure, "CARTIER_LLM_API_KEY is not set");
    }
    split_base_url(config_.base_url, host_, path_prefix_);
  }

  std::string identity() const override { return config_.model; }

  std::string complete(const std::string& prompt, const LlmParams& params) override {
    json body;
    body["model"] = params.model.empty() ? config_.model : params.model;
    body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
    body["temperature"] = params.temperature;
    body["max_tokens"] = params.max_tokens;
    if (!params.stop.empty()) body["stop"] = params.stop;

    SlotGuard guard(limiter_);
    httplib::Client client(host_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_default_headers({{"Authorization", "Bearer " + config_.api_key}});

    const auto res = client.Post(path_prefix_ + "/chat/completions", body.dump(),
                                 "application/json");
    if (!res) {
      throw Error(Errc::NetworkError,
                  host_ + ": " + httplib::to_string(res.error()));
    }
    if (res->status == 401 || res->status == 403) {
      throw Error(Errc::AuthFailure, "endpoint returned " + std::to_string(res->status));
    }
    if (res->status == 429) {
      throw Error(Errc::RateLimited, "endpoint returned 429");
    }
    if (res->status != 200) {
      throw Error(Errc::NetworkError,
                  "endpoint returned " + std::to_string(res->status) + ": " + res->body);
    }
    try {
      const json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(Errc::NetworkError, std::string("unparseable completion payload: ") + e.what());
    }
  }

 private:
  HttpBackendConfig config_;
  std::string host_;
  std::string path_prefix_;
  InFlightLimiter limiter_;
};

}  // namespace

std::unique_ptr<LlmBackend> make_http_backend(const HttpBackendConfig& config) {
  return std::make_unique<HttpBackend>(config);
}

}  // namespace cartier
