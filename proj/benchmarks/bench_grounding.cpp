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

#include <benchmark/benchmark.h>

#include "cartier/grounding.hpp"
#include "cartier/synthetic.hpp"

namespace {

using namespace cartier;

std::vector<std::string> forty_labels() {
  const auto& vocab = household_vocabulary();
  return {vocab.begin(), vocab.end()};
}

void BM_BuildPrompt(benchmark::State& state) {
  const std::vector<std::string> vocab = forty_labels();
  const std::string query = "I spilled coffee all over the rug and need to clean it up fast.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_prompt(default_prompt_template(), vocab, query));
  }
}
BENCHMARK(BM_BuildPrompt);

void BM_ParseObject(benchmark::State& state) {
  const std::vector<std::string> vocab = forty_labels();
  const std::string response =
      "Considering the spill and the urgency, the robot should head to the sink first, "
      "although the trash can may also be useful afterwards.";
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_object(response, vocab));
  }
}
BENCHMARK(BM_ParseObject);

void BM_ResponseCacheGet(benchmark::State& state) {
  ResponseCache cache;
  for (int i = 0; i < 1000; ++i) {
    cache.put("model", "tmpl", "prompt " + std::to_string(i), "response " + std::to_string(i));
  }
  int i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(cache.get("model", "tmpl", "prompt " + std::to_string(i % 1000)));
    ++i;
  }
}
BENCHMARK(BM_ResponseCacheGet);

}  // namespace
