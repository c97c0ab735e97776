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

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cartier/evaluation.hpp"
#include "cartier/synthetic.hpp"

namespace {

using namespace cartier;

// Exit codes: 0 success, 1 data/build error, 2 configuration/auth error,
// 3 backend error.
constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::AuthFailure:
      return kExitConfig;
    case Errc::NetworkError:
    case Errc::RateLimited:
    case Errc::CacheMiss:
      return kExitBackend;
    default:
      return kExitData;
  }
}

struct EmbedderOptions {
  std::string kind{"test"};  // test | text-only
  int dimension{32};
};

// text-only variant of the test embedder, for pipelines that ingest
// precomputed pixel embeddings instead of computing them.
class TextOnlyTestEmbedder final : public Embedder {
 public:
  explicit TextOnlyTestEmbedder(int dim) : inner_(dim) {}
  std::string identity() const override { return "test-embedder-text/v1/d" + std::to_string(inner_.dimension()); }
  int dimension() const override { return inner_.dimension(); }
  Eigen::VectorXd embed_text(std::string_view text) const override {
    return inner_.embed_text(text);
  }

 private:
  TestEmbedder inner_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderOptions& opts) {
  if (opts.kind == "test") return std::make_unique<TestEmbedder>(opts.dimension);
  if (opts.kind == "text-only") return std::make_unique<TextOnlyTestEmbedder>(opts.dimension);
  throw Error(Errc::InvalidArgument, "unknown embedder: " + opts.kind);
}

struct BackendOptions {
  std::string kind{"mock"};  // mock | live | record | replay
  std::string model;         // overrides CARTIER_LLM_MODEL
  std::string cache_file;
  std::string template_file;
};

struct BackendBundle {
  std::unique_ptr<LlmBackend> backend;
  std::unique_ptr<ResponseCache> cache;
  CompletionMode mode{CompletionMode::Live};
};

std::string resolved_model(const BackendOptions& opts, const char* fallback) {
  if (!opts.model.empty()) return opts.model;
  if (const char* env = std::getenv("CARTIER_LLM_MODEL")) return env;
  return fallback;
}

BackendBundle make_backend(const BackendOptions& opts,
                           const std::vector<std::string>& vocabulary) {
  BackendBundle bundle;
  if (!opts.cache_file.empty()) {
    bundle.cache = std::make_unique<ResponseCache>(opts.cache_file);
  }
  if (opts.kind == "mock") {
    bundle.backend = MockBackend::keyword_oracle(resolved_model(opts, "mock"), vocabulary);
    bundle.mode = CompletionMode::Live;
  } else if (opts.kind == "replay") {
    if (!bundle.cache) {
      throw Error(Errc::InvalidArgument, "--backend replay requires --cache");
    }
    bundle.backend = MockBackend::unreachable(resolved_model(opts, "mock"));
    bundle.mode = CompletionMode::Replay;
  } else if (opts.kind == "live" || opts.kind == "record") {
    HttpBackendConfig config = HttpBackendConfig::from_env();
    if (!opts.model.empty()) config.model = opts.model;
    bundle.backend = make_http_backend(config);
    bundle.mode = opts.kind == "record" ? CompletionMode::Record : CompletionMode::Live;
    if (bundle.mode == CompletionMode::Record && !bundle.cache) {
      throw Error(Errc::InvalidArgument, "--backend record requires --cache");
    }
  } else {
    throw Error(Errc::InvalidArgument, "unknown backend: " + opts.kind);
  }
  return bundle;
}

PromptTemplate resolve_template(const BackendOptions& opts) {
  if (opts.template_file.empty()) return default_prompt_template();
  return load_prompt_template(opts.template_file);
}

struct LoadedIndex {
  std::optional<ObjectIndex> object_index;
  std::optional<EmbeddingGrid> grid;
};

LoadedIndex load_any_index(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::MissingFile, path);
  }
  bool is_object_index = false;
  try {
    const auto j = nlohmann::json::parse(in);
    is_object_index = j.contains("variant");
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::MalformedRecord, path + ": " + e.what());
  }
  LoadedIndex loaded;
  if (is_object_index) {
    loaded.object_index = load_object_index(path);
  } else {
    loaded.grid = load_grid(path);
  }
  return loaded;
}

void add_backend_options(CLI::App* cmd, BackendOptions& opts) {
  cmd->add_option("--backend", opts.kind, "mock | live | record | replay")
      ->check(CLI::IsMember({"mock", "live", "record", "replay"}));
  cmd->add_option("--model", opts.model, "model name (default: CARTIER_LLM_MODEL)");
  cmd->add_option("--cache", opts.cache_file, "response cache file (JSONL)");
  cmd->add_option("--template", opts.template_file, "prompt template file");
}

void add_embedder_options(CLI::App* cmd, EmbedderOptions& opts) {
  cmd->add_option("--embedder", opts.kind, "test | text-only")
      ->check(CLI::IsMember({"test", "text-only"}));
  cmd->add_option("--embed-dim", opts.dimension, "embedding dimension")->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------------------

int cmd_build_index(const std::string& trajectory_dir, const std::string& type,
                    const std::string& out, double threshold, bool compensate,
                    double cell_size, const std::vector<int>& drop_dims,
                    const EmbedderOptions& embedder_opts) {
  const Trajectory traj = load_trajectory(trajectory_dir);
  if (type == "embedding-grid") {
    const auto embedder = make_embedder(embedder_opts);
    const EmbeddingGrid grid = accumulate_grid(traj, *embedder, cell_size, drop_dims);
    save_grid(grid, out);
    std::int64_t points = 0;
    int occupied = 0;
    for (std::size_t i = 0; i < grid.counts.size(); ++i) {
      points += grid.counts[i];
      if (grid.counts[i] > 0) ++occupied;
    }
    std::printf("embedding-grid: %dx%d cells (%d occupied), %lld points -> %s\n", grid.rows,
                grid.cols, occupied, static_cast<long long>(points), out.c_str());
    return kExitOk;
  }

  const ObjectIndex index = type == "object-depth"
                                ? build_object_depth(traj, threshold)
                                : build_object_viewpoint(traj, threshold, compensate);
  save_object_index(index, out);
  for (const auto& [key, entry] : index.entries) {
    std::printf("%s: 1 entry (frame %lld, score %.1f)\n", entry.label.c_str(),
                static_cast<long long>(entry.source_frame), entry.score);
  }
  std::printf("%s index: %zu labels -> %s\n", type.c_str(), index.entries.size(), out.c_str());
  return kExitOk;
}

int cmd_query(const std::string& index_file, const std::string& trajectory_dir,
              const std::string& text, bool interactive, const BackendOptions& backend_opts,
              const EmbedderOptions& embedder_opts, double threshold) {
  const LoadedIndex index = load_any_index(index_file);

  std::vector<std::string> vocabulary;
  if (!trajectory_dir.empty()) {
    vocabulary = detector_vocabulary(load_trajectory(trajectory_dir), threshold);
  } else if (index.object_index) {
    for (const auto& [key, entry] : index.object_index->entries) {
      vocabulary.push_back(entry.label);
    }
  } else {
    throw Error(Errc::InvalidArgument,
                "an embedding-grid index needs --trajectory to derive the vocabulary");
  }

  BackendBundle backend = make_backend(backend_opts, vocabulary);
  GroundingContext ctx;
  ctx.prompt_template = resolve_template(backend_opts);
  ctx.backend = backend.backend.get();
  ctx.cache = backend.cache.get();
  ctx.mode = backend.mode;
  ctx.params.model = backend.backend->identity();

  const auto embedder = make_embedder(embedder_opts);
  const auto answer_one = [&](const std::string& query) {
    const GroundingResult result =
        index.object_index ? ground_query(vocabulary, query, ctx, *index.object_index)
                           : ground_query(vocabulary, query, ctx, *index.grid, *embedder);
    std::printf("%s @ (%.3f, %.3f, %.3f)\n", result.label.c_str(), result.point.p.x(),
                result.point.p.y(), result.point.p.z());
  };

  if (interactive) {
    std::string line;
    while (std::getline(std::cin, line)) {
      if (line.empty()) continue;
      try {
        answer_one(line);
      } catch (const Error& e) {
        std::printf("error: %s\n", e.what());
      }
    }
    return kExitOk;
  }
  answer_one(text);
  return kExitOk;
}

int cmd_gen_synthetic(const SyntheticConfig& config, const std::string& out) {
  const SyntheticScene scene = generate_synthetic(config);
  std::filesystem::create_directories(out);
  save_trajectory(scene.trajectory, std::filesystem::path(out) / "trajectory");
  save_scene_truth(scene.truth, std::filesystem::path(out) / "scene.json");
  save_queries(scene.queries, std::filesystem::path(out) / "queries.json");
  std::printf("synthetic scene %s: %zu objects, %zu frames, %zu queries -> %s\n",
              scene.truth.scene_id.c_str(), scene.truth.objects.size(),
              scene.trajectory.frames.size(), scene.queries.size(), out.c_str());
  return kExitOk;
}

struct EvaluateArgs {
  std::string trajectory_dir;
  std::string scene_file;
  std::string queries_file;
  std::vector<std::string> methods{"cartier"};
  std::vector<std::string> indices{"object-depth"};
  std::string eq_file;
  std::string proposals_file;
  double threshold{0.8};
  double proposal_threshold{kCosineProposalThreshold};
  int token_limit{77};
  double cell_size{0.1};
  std::vector<int> drop_dims;
  bool no_compensate{false};
  int threads{1};
  std::string out_csv;
  std::string out_md;
};

int cmd_evaluate(const EvaluateArgs& args, const BackendOptions& backend_opts,
                 const EmbedderOptions& embedder_opts) {
  const Trajectory traj = load_trajectory(args.trajectory_dir);
  const SceneTruth truth = load_scene_truth(args.scene_file);
  const std::vector<Query> queries = load_queries(args.queries_file, truth);
  const std::vector<std::string> vocabulary = detector_vocabulary(traj, args.threshold);

  EvaluationJob job;
  job.truth = &truth;
  job.queries = &queries;
  job.vocabulary = vocabulary;
  job.methods.clear();
  for (const std::string& m : args.methods) {
    job.methods.push_back(method_from_string(m));
  }
  job.cartier_indices = args.indices;
  job.token_limit = args.token_limit;
  job.proposal_threshold = args.proposal_threshold;
  job.threads = args.threads;

  const bool wants_cartier =
      std::find(job.methods.begin(), job.methods.end(), Method::Cartier) != job.methods.end();
  const bool wants_grid =
      job.methods.size() > static_cast<std::size_t>(wants_cartier ? 1 : 0) ||
      std::find(args.indices.begin(), args.indices.end(), std::string("embedding-grid")) !=
          args.indices.end();

  std::optional<ObjectIndex> object_depth;
  std::optional<ObjectIndex> object_viewpoint;
  if (wants_cartier) {
    if (std::find(args.indices.begin(), args.indices.end(), std::string("object-depth")) !=
        args.indices.end()) {
      object_depth = build_object_depth(traj, args.threshold);
      job.object_depth = &*object_depth;
    }
    if (std::find(args.indices.begin(), args.indices.end(), std::string("object-viewpoint")) !=
        args.indices.end()) {
      object_viewpoint = build_object_viewpoint(traj, args.threshold, !args.no_compensate);
      job.object_viewpoint = &*object_viewpoint;
    }
  }

  const auto embedder = make_embedder(embedder_opts);
  std::optional<EmbeddingGrid> grid;
  if (wants_grid) {
    grid = accumulate_grid(traj, *embedder, args.cell_size, args.drop_dims);
    job.grid = &*grid;
    job.embedder = embedder.get();
  }

  std::optional<FileProposer> file_proposer;
  std::optional<FixedListProposer> vocab_proposer;
  if (std::find(job.methods.begin(), job.methods.end(), Method::ProposalThreshold) !=
      job.methods.end()) {
    if (!args.proposals_file.empty()) {
      file_proposer.emplace(args.proposals_file);
      job.proposer = &*file_proposer;
    } else {
      // without an external proposal source, fall back to the detector labels
      vocab_proposer.emplace(vocabulary);
      job.proposer = &*vocab_proposer;
    }
  }

  if (!args.eq_file.empty()) {
    job.equivalence = EquivalenceConfig::load(args.eq_file);
  }

  BackendBundle backend = make_backend(backend_opts, vocabulary);
  job.grounding.prompt_template = resolve_template(backend_opts);
  job.grounding.backend = backend.backend.get();
  job.grounding.cache = backend.cache.get();
  job.grounding.mode = backend.mode;
  job.grounding.params.model = backend.backend->identity();

  const Report report = evaluate(job);
  write_report_csv(report, args.out_csv);
  if (!args.out_md.empty()) {
    write_report_markdown(report, args.out_md);
  }
  std::printf("%s", report_to_markdown(report).c_str());
  std::printf("%zu records -> %s\n", report.records.size(), args.out_csv.c_str());
  return kExitOk;
}

struct AdjudicateArgs {
  std::string csv_file;
  std::string queries_file;
  std::string scene_file;
  std::string eq_file;
  std::string out_csv;
  std::string out_md;
};

int cmd_adjudicate(const AdjudicateArgs& args) {
  std::vector<PredictionRecord> records = read_report_csv(args.csv_file);
  const SceneTruth truth = load_scene_truth(args.scene_file);
  const std::vector<Query> queries = load_queries(args.queries_file, truth);
  EquivalenceConfig eq = EquivalenceConfig::load(args.eq_file);

  std::map<std::string, const Query*> by_id;
  for (const Query& q : queries) {
    by_id[q.query_id] = &q;
  }

  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PredictionRecord& r = records[i];
    if (r.failed || !r.chosen_label || !by_id.count(r.query_id)) continue;
    if (object_match(*r.chosen_label, by_id.at(r.query_id)->plausible_labels, eq) ==
        MatchState::NeedsAdjudication) {
      pending.push_back(i);
    }
  }
  if (pending.empty()) {
    std::printf("no records need adjudication\n");
    return kExitOk;
  }
  if (isatty(STDIN_FILENO) == 0) {
    std::fprintf(stderr, "%zu records need adjudication but stdin is not a terminal\n",
                 pending.size());
    return kExitConfig;
  }

  for (std::size_t i : pending) {
    const PredictionRecord& r = records[i];
    const Query& q = *by_id.at(r.query_id);
    std::printf("\nquery %s (%s): %s\n", q.query_id.c_str(),
                std::string(to_string(q.type)).c_str(), q.text.c_str());
    std::printf("  predicted \"%s\", plausible:", r.chosen_label->c_str());
    for (const std::string& label : q.plausible_labels) {
      std::printf(" \"%s\"", label.c_str());
    }
    std::printf("\n  accept as a match? [y/n] ");
    std::fflush(stdout);
    std::string answer;
    if (!std::getline(std::cin, answer)) break;
    const bool accept = !answer.empty() && (answer[0] == 'y' || answer[0] == 'Y');

    // Resolve the ambiguous colocation rule(s) that routed this record here.
    const std::string pred_norm = normalize_label(*r.chosen_label);
    for (auto& c : eq.colocations) {
      if (c.status != EquivalenceConfig::ColocationStatus::Ambiguous) continue;
      if (normalize_label(c.predicted) != pred_norm) continue;
      for (const std::string& label : q.plausible_labels) {
        if (normalize_label(c.target) == normalize_label(label)) {
          c.status = accept ? EquivalenceConfig::ColocationStatus::Accept
                            : EquivalenceConfig::ColocationStatus::Reject;
        }
      }
    }
  }
  eq.save(args.eq_file);

  // Re-derive the match column and re-emit the report.
  for (PredictionRecord& r : records) {
    if (r.failed || !r.chosen_label || !by_id.count(r.query_id)) continue;
    r.match = object_match(*r.chosen_label, by_id.at(r.query_id)->plausible_labels, eq);
  }
  Report report;
  report.records = std::move(records);
  aggregate_report(report);
  write_report_csv(report, args.out_csv.empty() ? args.csv_file : args.out_csv);
  if (!args.out_md.empty()) {
    write_report_markdown(report, args.out_md);
  }
  std::printf("decisions saved to %s\n", args.eq_file.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CARTIER: conversational language grounding over spatial language indices"};
  app.require_subcommand(1);

  // build-index
  std::string trajectory_dir, index_type, out_file;
  double threshold = 0.8;
  bool compensate = false;
  double cell_size = 0.1;
  std::vector<int> drop_dims;
  EmbedderOptions embedder_opts;
  auto* build = app.add_subcommand("build-index", "build a spatial language index");
  build->add_option("--trajectory", trajectory_dir, "trajectory directory")->required();
  build->add_option("--type", index_type, "object-depth | object-viewpoint | embedding-grid")
      ->required()
      ->check(CLI::IsMember({"object-depth", "object-viewpoint", "embedding-grid"}));
  build->add_option("--out", out_file, "output index file")->required();
  build->add_option("--threshold", threshold, "detection confidence threshold (strict >)");
  build->add_flag("--compensate", compensate, "weak-perspective area compensation (viewpoint)");
  build->add_option("--cell-size", cell_size, "grid cell size in meters");
  build->add_option("--drop-dims", drop_dims, "embedding dimensions to drop at query time");
  add_embedder_options(build, embedder_opts);

  // query
  std::string index_file, query_text;
  bool interactive = false;
  BackendOptions backend_opts;
  auto* query = app.add_subcommand("query", "ground one query to a location");
  query->add_option("--index", index_file, "index file from build-index")->required();
  query->add_option("--trajectory", trajectory_dir, "trajectory directory (vocabulary source)");
  query->add_option("--text", query_text, "the user query");
  query->add_flag("--interactive", interactive, "read queries from stdin");
  query->add_option("--threshold", threshold, "detection confidence threshold");
  add_backend_options(query, backend_opts);
  add_embedder_options(query, embedder_opts);

  // gen-synthetic
  SyntheticConfig config;
  std::string room_spec = "10x8x3";
  auto* gen = app.add_subcommand("gen-synthetic", "generate a synthetic dataset");
  gen->add_option("--seed", config.seed, "random seed")->required();
  gen->add_option("--out", out_file, "output dataset directory")->required();
  gen->add_option("--objects", config.object_count, "number of objects");
  gen->add_option("--waypoints", config.waypoint_count, "number of trajectory frames");
  gen->add_option("--room", room_spec, "room extents, e.g. 10x8x3");
  gen->add_option("--size-min", config.object_size_min, "minimum object edge (m)");
  gen->add_option("--size-max", config.object_size_max, "maximum object edge (m)");
  gen->add_option("--camera-height", config.camera_height, "camera height (m)");
  gen->add_option("--depth-noise", config.depth_noise_sigma, "gaussian depth noise sigma (m)");
  gen->add_option("--width", config.intrinsics.width, "image width (px)");
  gen->add_option("--height", config.intrinsics.height, "image height (px)");
  gen->add_option("--fx", config.intrinsics.fx, "focal length x (px)");
  gen->add_option("--fy", config.intrinsics.fy, "focal length y (px)");

  // evaluate
  EvaluateArgs eval_args;
  auto* eval = app.add_subcommand("evaluate", "batch-evaluate methods against ground truth");
  eval->add_option("--trajectory", eval_args.trajectory_dir, "trajectory directory")->required();
  eval->add_option("--scene", eval_args.scene_file, "scene truth JSON")->required();
  eval->add_option("--queries", eval_args.queries_file, "query set JSON")->required();
  eval->add_option("--methods,--method", eval_args.methods,
                   "cartier | direct-index | proposal-threshold");
  eval->add_option("--indices,--index", eval_args.indices,
                   "cartier index variants: object-depth | object-viewpoint | embedding-grid");
  eval->add_option("--eq", eval_args.eq_file, "equivalence config JSON");
  eval->add_option("--proposals", eval_args.proposals_file, "proposals per query (JSON)");
  eval->add_option("--threshold", eval_args.threshold, "detection confidence threshold");
  eval->add_option("--proposal-threshold", eval_args.proposal_threshold,
                   "similarity threshold for surviving proposals");
  eval->add_option("--token-limit", eval_args.token_limit, "direct-index token limit");
  eval->add_option("--cell-size", eval_args.cell_size, "grid cell size in meters");
  eval->add_option("--drop-dims", eval_args.drop_dims, "embedding dimensions to drop");
  eval->add_flag("--no-compensate", eval_args.no_compensate,
                 "disable weak-perspective compensation for object-viewpoint");
  eval->add_option("--threads", eval_args.threads, "worker threads")->check(CLI::PositiveNumber);
  eval->add_option("--out-csv", eval_args.out_csv, "per-record CSV output")->required();
  eval->add_option("--out-md", eval_args.out_md, "markdown summary output");
  add_backend_options(eval, backend_opts);
  add_embedder_options(eval, embedder_opts);

  // adjudicate
  AdjudicateArgs adj_args;
  auto* adj = app.add_subcommand("adjudicate", "resolve needs-adjudication records");
  adj->add_option("--csv", adj_args.csv_file, "report CSV from evaluate")->required();
  adj->add_option("--queries", adj_args.queries_file, "query set JSON")->required();
  adj->add_option("--scene", adj_args.scene_file, "scene truth JSON")->required();
  adj->add_option("--eq", adj_args.eq_file, "equivalence config JSON (updated in place)")
      ->required();
  adj->add_option("--out-csv", adj_args.out_csv, "re-emitted CSV (default: --csv in place)");
  adj->add_option("--out-md", adj_args.out_md, "re-emitted markdown");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if ((backend_opts.kind == "replay" || backend_opts.kind == "record") &&
        backend_opts.cache_file.empty() && (query->parsed() || eval->parsed())) {
      std::fprintf(stderr, "--backend %s requires --cache\n", backend_opts.kind.c_str());
      return kExitConfig;
    }
    if (build->parsed()) {
      return cmd_build_index(trajectory_dir, index_type, out_file, threshold, compensate,
                             cell_size, drop_dims, embedder_opts);
    }
    if (query->parsed()) {
      if (!interactive && query_text.empty()) {
        std::fprintf(stderr, "query: provide --text or --interactive\n");
        return kExitConfig;
      }
      return cmd_query(index_file, trajectory_dir, query_text, interactive, backend_opts,
                       embedder_opts, threshold);
    }
    if (gen->parsed()) {
      unsigned wx = 0, wy = 0, wz = 0;
      if (std::sscanf(room_spec.c_str(), "%ux%ux%u", &wx, &wy, &wz) == 3) {
        config.room_extents = Vec3(wx, wy, wz);
      } else {
        std::fprintf(stderr, "gen-synthetic: bad --room (expected WxLxH)\n");
        return kExitConfig;
      }
      config.intrinsics.cx = config.intrinsics.width / 2.0;
      config.intrinsics.cy = config.intrinsics.height / 2.0;
      return cmd_gen_synthetic(config, out_file);
    }
    if (eval->parsed()) {
      return cmd_evaluate(eval_args, backend_opts, embedder_opts);
    }
    if (adj->parsed()) {
      return cmd_adjudicate(adj_args);
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitConfig;
}
