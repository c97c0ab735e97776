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

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace cartier {

/// Completion parameters. Maximum-likelihood sampling by default:
/// temperature 0 and no stop sequences unless explicitly overridden.
struct LlmParams {
  double temperature{0.0};
  int max_tokens{256};
  std::string model;
  std::vector<std::string> stop;

  // NetworkError retry policy for complete(); other failures surface
  // immediately.
  int max_attempts{4};
  int initial_backoff_ms{250};
  int max_backoff_ms{4000};
};

/// A text-completion backend. identity() is the stable name used in cache
/// keys (typically the model name), so recorded responses replay across
/// endpoints.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;

  virtual std::string identity() const = 0;
  virtual std::string complete(const std::string& prompt, const LlmParams& params) = 0;
};

/// Scriptable in-process backend for tests and offline runs.
class MockBackend final : public LlmBackend {
 public:
  using Responder = std::function<std::string(const std::string& prompt)>;

  MockBackend(std::string identity, Responder responder);

  /// Deterministic stand-in for a cooperative model: answers with the
  /// vocabulary label whose last word-boundary occurrence in the prompt is
  /// latest (the label named in the user query, when there is one), phrased
  /// as a short sentence.
  static std::unique_ptr<MockBackend> keyword_oracle(std::string identity,
                                                     std::vector<std::string> vocabulary);

  /// Backend that fails on any use. Replay runs hold one to prove that no
  /// network-facing code path is reached.
  static std::unique_ptr<MockBackend> unreachable(std::string identity);

  std::string identity() const override { return identity_; }
  std::string complete(const std::string& prompt, const LlmParams& params) override;

 private:
  std::string identity_;
  Responder responder_;
};

/// Chat-completion HTTP client configuration, read from the environment:
/// CARTIER_LLM_API_KEY, CARTIER_LLM_BASE_URL, CARTIER_LLM_MODEL.
struct HttpBackendConfig {
  std::string base_url{"https://api.openai.com/v1"};
  std::string api_key;
  std::string model{"gpt-4"};
  int max_in_flight{4};
  int timeout_seconds{60};

  static HttpBackendConfig from_env();
};

/// Creates the HTTPS chat-completion backend. Throws AuthFailure when the
/// API key is empty.
std::unique_ptr<LlmBackend> make_http_backend(const HttpBackendConfig& config);

}  // namespace cartier
