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

#include <doctest.h>

#include <atomic>
#include <fstream>
#include <set>
#include <thread>

#include "cartier/grounding.hpp"
#include "cartier/synthetic.hpp"
#include "support/test_util.hpp"

using namespace cartier;
using cartier::testing::ScopedTempDir;
using cartier::testing::TestRng;
using cartier::testing::thrown_code;

TEST_SUITE("grounding") {

TEST_CASE("build_prompt substitutes both placeholders") {
  const std::vector<std::string> vocab{"bed", "sofa", "mug"};
  const std::string prompt = build_prompt(default_prompt_template(), vocab, "I'm sleepy");
  CHECK(prompt.find("bed, sofa, mug") != std::string::npos);
  CHECK(prompt.find("I'm sleepy") != std::string::npos);
  CHECK(prompt.find("{objects}") == std::string::npos);
  CHECK(prompt.find("{query}") == std::string::npos);
}

TEST_CASE("build_prompt lists each object type once") {
  const std::vector<std::string> vocab{"bed", "Bed", "trash_can", "trash can", "mug"};
  const std::string prompt = build_prompt(default_prompt_template(), vocab, "hello");
  CHECK(prompt.find("bed, trash_can, mug") != std::string::npos);
}

TEST_CASE("build_prompt validates its inputs") {
  CHECK(thrown_code([] { build_prompt(default_prompt_template(), {}, "q"); }) ==
        Errc::EmptyVocabulary);
  CHECK(thrown_code([] { build_prompt(default_prompt_template(), {"bed"}, ""); }) ==
        Errc::EmptyQuery);
}

TEST_CASE("templates require each placeholder exactly once") {
  CHECK(thrown_code([] { make_prompt_template("no placeholders", "t"); }) ==
        Errc::InvalidArgument);
  CHECK(thrown_code([] { make_prompt_template("{objects} {objects} {query}", "t"); }) ==
        Errc::InvalidArgument);
  CHECK(!thrown_code([] { make_prompt_template("{objects} then {query}", "t"); }));
}

TEST_CASE("templates load from files") {
  ScopedTempDir tmp("tmpl");
  std::ofstream(tmp.path() / "terse.txt") << "Objects: {objects}. Query: {query}.\n";
  const PromptTemplate tmpl = load_prompt_template(tmp.path() / "terse.txt");
  CHECK(tmpl.template_id == "terse");
  CHECK(build_prompt(tmpl, {"mug"}, "x") == "Objects: mug. Query: x.");
}

TEST_CASE("distinct inputs produce distinct prompts") {
  TestRng rng(41);
  std::set<std::string> prompts;
  int built = 0;
  for (int i = 0; i < 400; ++i) {
    std::vector<std::string> vocab;
    const int n = 1 + rng.uniform_int(5);
    for (int k = 0; k < n; ++k) {
      std::string label;
      for (int c = 0; c < 6; ++c) {
        label += static_cast<char>('a' + rng.uniform_int(26));
      }
      vocab.push_back(label);
    }
    std::string query;
    for (int c = 0; c < 12; ++c) {
      query += static_cast<char>('a' + rng.uniform_int(26));
    }
    prompts.insert(build_prompt(default_prompt_template(), vocab, query));
    ++built;
  }
  CHECK(static_cast<int>(prompts.size()) == built);
}

TEST_CASE("parse_object handles answer-style responses") {
  const std::vector<std::string> vocab{"bed", "sofa", "mug"};
  CHECK(parse_object(
            "To serve this request, the robot must drive to the object called `Bed'",
            vocab) == "bed");
  CHECK(parse_object("mug", vocab) == "mug");
  CHECK(parse_object("not the sofa; go to the bed", vocab) == "bed");
  CHECK(parse_object("NAVIGATE TO THE SOFA.", vocab) == "sofa");
}

TEST_CASE("parse_object treats separators as equivalent") {
  const std::vector<std::string> vocab{"trash can", "bed"};
  CHECK(parse_object("head to the trash_can", vocab) == "trash can");
  CHECK(parse_object("head to the trash-can", vocab) == "trash can");
}

TEST_CASE("parse_object handles curly typographic quotes") {
  const std::vector<std::string> vocab{"bed", "sofa"};
  // U+2018/U+2019 quotation marks around the label act as word boundaries
  CHECK(parse_object("head for the ‘bed’ now", vocab) == "bed");
}

TEST_CASE("parse_object respects word boundaries") {
  const std::vector<std::string> vocab{"chair", "bed"};
  // "armchairs" does not contain the word "chair"
  CHECK(thrown_code([&] { parse_object("all the armchairs", vocab); }) == Errc::NoMatch);
  CHECK(parse_object("a chair, yes", vocab) == "chair");
}

TEST_CASE("parse_object prefers the longer label on equal match ends") {
  const std::vector<std::string> vocab{"machine", "coffee machine"};
  CHECK(parse_object("use the coffee machine", vocab) == "coffee machine");
}

TEST_CASE("parse_object returns only vocabulary labels under fuzzing") {
  TestRng rng(42);
  const std::vector<std::string> vocab{"bed", "sofa", "coffee machine", "trash can", "mug"};
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyz '`-_.,!?";
  int matched = 0;
  for (int i = 0; i < 2000; ++i) {
    std::string response;
    const int len = rng.uniform_int(80);
    for (int c = 0; c < len; ++c) {
      response += alphabet[rng.uniform_int(static_cast<int>(alphabet.size()))];
    }
    if (rng.uniform() < 0.3) {
      response += " " + vocab[rng.uniform_int(static_cast<int>(vocab.size()))] + " ";
      const int extra = rng.uniform_int(20);
      for (int c = 0; c < extra; ++c) {
        response += alphabet[rng.uniform_int(static_cast<int>(alphabet.size()))];
      }
    }
    try {
      const std::string label = parse_object(response, vocab);
      CHECK(std::find(vocab.begin(), vocab.end(), label) != vocab.end());
      ++matched;
    } catch (const Error& e) {
      CHECK(e.code() == Errc::NoMatch);
    }
  }
  CHECK(matched > 0);
}

TEST_CASE("response cache records and replays byte-exactly") {
  ScopedTempDir tmp("cache");
  const auto file = tmp.path() / "cache.jsonl";
  {
    ResponseCache cache(file);
    CHECK(cache.size() == 0);
    cache.put("gpt-x", "t1", "prompt one", "response\nwith newline");
    cache.put("gpt-x", "t1", "prompt two", "plain");
    CHECK(cache.size() == 2);
    CHECK(*cache.get("gpt-x", "t1", "prompt one") == "response\nwith newline");
  }
  ResponseCache reloaded(file);
  CHECK(reloaded.size() == 2);
  CHECK(*reloaded.get("gpt-x", "t1", "prompt one") == "response\nwith newline");
  CHECK(!reloaded.get("gpt-x", "t1", "prompt three"));
  CHECK(!reloaded.get("gpt-y", "t1", "prompt one"));  // identity is part of the key
}

TEST_CASE("complete() modes") {
  ScopedTempDir tmp("modes");
  const auto file = tmp.path() / "cache.jsonl";
  LlmParams params;
  params.model = "mock-model";

  int calls = 0;
  MockBackend backend("mock-model", [&](const std::string&) {
    ++calls;
    return "the answer";
  });

  SUBCASE("record persists, replay serves without touching the backend") {
    {
      ResponseCache cache(file);
      CHECK(complete(backend, "p", params, &cache, CompletionMode::Record, "t") ==
            "the answer");
      CHECK(calls == 1);
    }
    ResponseCache cache(file);
    auto poison = MockBackend::unreachable("mock-model");
    CHECK(complete(*poison, "p", params, &cache, CompletionMode::Replay, "t") == "the answer");
    CHECK(thrown_code([&] {
            complete(*poison, "unseen", params, &cache, CompletionMode::Replay, "t");
          }) == Errc::CacheMiss);
  }

  SUBCASE("live ignores the cache") {
    ResponseCache cache(file);
    CHECK(complete(backend, "p", params, &cache, CompletionMode::Live, "t") == "the answer");
    CHECK(!cache.get("mock-model", "t", "p"));
  }
}

TEST_CASE("complete() retries NetworkError with backoff, surfaces the rest") {
  LlmParams params;
  params.max_attempts = 3;
  params.initial_backoff_ms = 1;
  params.max_backoff_ms = 2;

  SUBCASE("transient network failures are retried") {
    int calls = 0;
    MockBackend flaky("m", [&](const std::string&) -> std::string {
      if (++calls < 3) throw Error(Errc::NetworkError, "transient");
      return "ok";
    });
    CHECK(complete(flaky, "p", params, nullptr, CompletionMode::Live, "t") == "ok");
    CHECK(calls == 3);
  }

  SUBCASE("exhausted retries surface NetworkError") {
    int calls = 0;
    MockBackend dead("m", [&](const std::string&) -> std::string {
      ++calls;
      throw Error(Errc::NetworkError, "down");
    });
    CHECK(thrown_code([&] { complete(dead, "p", params, nullptr, CompletionMode::Live, "t"); }) ==
          Errc::NetworkError);
    CHECK(calls == 3);
  }

  SUBCASE("auth failures are not retried") {
    int calls = 0;
    MockBackend denied("m", [&](const std::string&) -> std::string {
      ++calls;
      throw Error(Errc::AuthFailure, "401");
    });
    CHECK(thrown_code([&] {
            complete(denied, "p", params, nullptr, CompletionMode::Live, "t");
          }) == Errc::AuthFailure);
    CHECK(calls == 1);
  }
}

TEST_CASE("keyword oracle answers with the label named by the query") {
  const std::vector<std::string> vocab{"bed", "sofa", "mug"};
  auto backend = MockBackend::keyword_oracle("oracle", vocab);
  const std::string prompt = build_prompt(default_prompt_template(), vocab, "go to the sofa");
  const std::string response = backend->complete(prompt, LlmParams{});
  CHECK(response.find("'sofa'") != std::string::npos);
  CHECK(parse_object(response, vocab) == "sofa");
}

TEST_CASE("ground_query end to end on a synthetic scene") {
  SyntheticConfig config;
  config.seed = 17;
  config.object_count = 4;
  config.waypoint_count = 8;
  const SyntheticScene scene = generate_synthetic(config);
  const std::vector<std::string> vocab = detector_vocabulary(scene.trajectory);
  const ObjectIndex index = build_object_depth(scene.trajectory);
  auto backend = MockBackend::keyword_oracle("oracle", vocab);

  GroundingContext ctx;
  ctx.prompt_template = default_prompt_template();
  ctx.backend = backend.get();
  ctx.mode = CompletionMode::Live;

  for (const Query& query : scene.queries) {
    const GroundingResult a = ground_query(vocab, query.text, ctx, index);
    const GroundingResult b = ground_query(vocab, query.text, ctx, index);
    CHECK(a.label == query.plausible_labels[0]);
    CHECK((a.point.p - b.point.p).norm() == 0.0);  // pure function of its inputs

    const SceneObject* obj = nullptr;
    for (const SceneObject& candidate : scene.truth.objects) {
      if (candidate.label == a.label) obj = &candidate;
    }
    REQUIRE(obj != nullptr);
    CHECK(point_to_aabb_distance(a.point, obj->box) < 1e-6);
  }
}

TEST_CASE("concurrent ground_query calls agree and share the cache safely") {
  SyntheticConfig config;
  config.seed = 19;
  config.object_count = 4;
  config.waypoint_count = 8;
  const SyntheticScene scene = generate_synthetic(config);
  const std::vector<std::string> vocab = detector_vocabulary(scene.trajectory);
  const ObjectIndex index = build_object_depth(scene.trajectory);
  auto backend = MockBackend::keyword_oracle("oracle", vocab);

  cartier::testing::ScopedTempDir tmp("conc");
  ResponseCache cache(tmp.path() / "cache.jsonl");
  GroundingContext ctx;
  ctx.prompt_template = default_prompt_template();
  ctx.backend = backend.get();
  ctx.cache = &cache;
  ctx.mode = CompletionMode::Record;

  // reference answers, computed serially
  std::vector<GroundingResult> expected;
  for (const Query& query : scene.queries) {
    expected.push_back(ground_query(vocab, query.text, ctx, index));
  }

  constexpr int kThreads = 8;
  constexpr int kRounds = 25;
  std::vector<std::thread> workers;
  std::atomic<int> mismatches{0};
  for (int t = 0; t < kThreads; ++t) {
    workers.emplace_back([&] {
      for (int round = 0; round < kRounds; ++round) {
        for (std::size_t q = 0; q < scene.queries.size(); ++q) {
          const GroundingResult got =
              ground_query(vocab, scene.queries[q].text, ctx, index);
          if (got.label != expected[q].label ||
              (got.point.p - expected[q].point.p).norm() != 0.0) {
            mismatches.fetch_add(1);
          }
        }
      }
    });
  }
  for (std::thread& worker : workers) {
    worker.join();
  }
  CHECK(mismatches.load() == 0);
  CHECK(cache.size() == scene.queries.size());  // one record per distinct prompt

  // the persisted file holds exactly the distinct records
  ResponseCache reloaded(tmp.path() / "cache.jsonl");
  CHECK(reloaded.size() == scene.queries.size());
}

TEST_CASE("NoMatch propagates with the response attached") {
  const std::vector<std::string> vocab{"bed", "sofa"};
  MockBackend off_script("m", [](const std::string&) { return "I cannot help with that."; });
  GroundingContext ctx;
  ctx.prompt_template = default_prompt_template();
  ctx.backend = &off_script;

  ObjectIndex index;
  index.entries.emplace("bed", IndexEntry{"bed", WorldPoint{Vec3(1, 2, 3)}, 0, 1.0});

  try {
    ground_query(vocab, "go somewhere", ctx, index);
    FAIL("expected NoMatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NoMatch);
    CHECK(std::string(e.what()).find("I cannot help with that.") != std::string::npos);
  }
}

TEST_CASE("parse succeeding on an unindexed label raises LabelNotIndexed") {
  const std::vector<std::string> vocab{"bed", "sofa"};
  auto backend = MockBackend::keyword_oracle("oracle", vocab);
  GroundingContext ctx;
  ctx.prompt_template = default_prompt_template();
  ctx.backend = backend.get();

  ObjectIndex index;  // "sofa" was filtered out of the index
  index.entries.emplace("bed", IndexEntry{"bed", WorldPoint{Vec3(1, 2, 3)}, 0, 1.0});
  CHECK(thrown_code([&] { ground_query(vocab, "go to the sofa", ctx, index); }) ==
        Errc::LabelNotIndexed);
}

}  // TEST_SUITE
