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

#include "cartier/llm_backend.hpp"

#include <cstdlib>
#include <utility>

#include "cartier/grounding.hpp"

namespace cartier {

MockBackend::MockBackend(std::string identity, Responder responder)
    : identity_(std::move(identity)), responder_(std::move(responder)) {}

std::string MockBackend::complete(const std::string& prompt, const LlmParams&) {
  return responder_(prompt);
}

std::unique_ptr<MockBackend> MockBackend::keyword_oracle(std::string identity,
                                                         std::vector<std::string> vocabulary) {
  return std::make_unique<MockBackend>(
      std::move(identity), [vocab = std::move(vocabulary)](const std::string& prompt) {
        std::string label;
        try {
          // Every vocabulary label appears in the prompt's object list, so
          // the last-occurrence rule lands on the label the query repeats
          // (or the final list item when the query names none).
          label = parse_object(prompt, vocab);
        } catch (const Error&) {
          label = vocab.empty() ? "nothing" : vocab.back();
        }
        return "The robot should head to the object called '" + label + "'.";
      });
}

std::unique_ptr<MockBackend> MockBackend::unreachable(std::string identity) {
  return std::make_unique<MockBackend>(std::move(identity), [](const std::string&) -> std::string {
    throw Error(Errc::NetworkError, "backend invoked while networking is disabled");
  });
}

HttpBackendConfig HttpBackendConfig::from_env() {
  HttpBackendConfig config;
  if (const char* url = std::getenv("CARTIER_LLM_BASE_URL")) config.base_url = url;
  if (const char* key = std::getenv("CARTIER_LLM_API_KEY")) config.api_key = key;
  if (const char* model = std::getenv("CARTIER_LLM_MODEL")) config.model = model;
  return config;
}

}  // namespace cartier
