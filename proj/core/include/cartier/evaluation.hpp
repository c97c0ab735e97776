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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cartier/grounding.hpp"

namespace cartier {

/// Label-equivalence rules for the object-match metric: synonym groups are
/// mutually interchangeable; colocation pairs accept (or flag) a predicted
/// label that habitually sits at the target's location.
struct EquivalenceConfig {
  enum class ColocationStatus { Accept, Reject, Ambiguous };

  struct Colocation {
    std::string predicted;
    std::string target;
    ColocationStatus status{ColocationStatus::Ambiguous};
  };

  std::vector<std::vector<std::string>> synonym_groups;
  std::vector<Colocation> colocations;

  void validate() const;  // throws InvalidArgument when a label is in two groups

  static EquivalenceConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

enum class MatchState { Match, NoMatch, NeedsAdjudication };

std::string_view to_string(MatchState m);
MatchState match_state_from_string(std::string_view s);

/// Whether the predicted label satisfies the plausible set, after synonym
/// normalization and colocation rules. Colocations marked ambiguous route
/// the record to human adjudication.
MatchState object_match(std::string_view predicted, const std::vector<std::string>& plausible,
                        const EquivalenceConfig& eq);

/// Minimum distance from the predicted point to any plausible object's box.
/// Throws UnknownPlausibleLabel when a plausible label names no instance.
double distance_metric(const WorldPoint& predicted, const SceneTruth& truth,
                       const std::vector<std::string>& plausible);

enum class Method { Cartier, DirectIndex, ProposalThreshold };

std::string_view to_string(Method m);
Method method_from_string(std::string_view s);

/// One evaluated (query, method, index) combination.
struct PredictionRecord {
  std::string query_id;
  std::string scene_id;
  Method method{Method::Cartier};
  std::string index_variant;  // object-depth | object-viewpoint | embedding-grid
  std::string model;
  QueryType query_type{QueryType::Explicit};
  std::optional<std::string> chosen_label;  // absent for direct-index
  WorldPoint predicted;
  std::optional<MatchState> match;  // absent when the method yields no label
  double distance{0.0};
  bool failed{false};
  std::string error;
};

/// Splits a query into tokens for the direct-index truncation rule.
/// Whitespace splitting by default; swap in a model tokenizer as needed.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual std::vector<std::string> tokenize(std::string_view text) const;
};

/// First `limit` tokens rejoined with single spaces; shorter text passes
/// through tokenization unchanged in content.
std::string truncate_tokens(std::string_view text, const Tokenizer& tokenizer, int limit);

/// Baseline: embed the (truncated) user query and take the best grid cell.
PredictionRecord run_direct_index(const Query& query, const SceneTruth& truth,
                                  const EmbeddingGrid& grid, const Embedder& embedder,
                                  const std::string& model, const Tokenizer& tokenizer,
                                  int token_limit = 77);

/// Supplies candidate object names for the proposal-threshold baseline.
class Proposer {
 public:
  virtual ~Proposer() = default;
  virtual std::vector<std::string> propose(const Query& query) const = 0;
};

/// Same candidates for every query.
class FixedListProposer final : public Proposer {
 public:
  explicit FixedListProposer(std::vector<std::string> proposals)
      : proposals_(std::move(proposals)) {}
  std::vector<std::string> propose(const Query&) const override { return proposals_; }

 private:
  std::vector<std::string> proposals_;
};

/// Proposals read from a JSON file: {"<query_id>": [...], "default": [...]}.
class FileProposer final : public Proposer {
 public:
  explicit FileProposer(const std::filesystem::path& path);
  std::vector<std::string> propose(const Query& query) const override;

 private:
  std::map<std::string, std::vector<std::string>> by_query_;
  std::vector<std::string> fallback_;
};

/// Stock proposal-similarity threshold of 12.05. It presumes an embedder
/// whose similarities are unnormalized (far above cosine range); against a
/// cosine-similarity embedder such as the bundled test embedder it filters
/// everything out, so those setups should use kCosineProposalThreshold.
inline constexpr double kUnnormalizedProposalThreshold = 12.05;
inline constexpr double kCosineProposalThreshold = 0.5;

/// Baseline: grid-score each proposal, keep those whose best similarity
/// reaches the threshold (deduplicated, order kept), let the LLM choose
/// among the survivors, and grid-locate the choice. Throws
/// NoSurvivingProposals when the threshold filters everything out; the
/// message carries a scale warning when the threshold exceeds the cosine
/// upper bound of 1.
PredictionRecord run_proposal_threshold(const Query& query, const SceneTruth& truth,
                                        const EmbeddingGrid& grid, const Embedder& embedder,
                                        const Proposer& proposer, const GroundingContext& ctx,
                                        const EquivalenceConfig& eq,
                                        double threshold = kUnnormalizedProposalThreshold);

/// Everything evaluate() needs. Index pointers may be null when the
/// corresponding variant is not requested.
struct EvaluationJob {
  const SceneTruth* truth{nullptr};
  const std::vector<Query>* queries{nullptr};
  std::vector<std::string> vocabulary;  // detector vocabulary for CARTIER prompts

  std::vector<Method> methods{Method::Cartier};
  std::vector<std::string> cartier_indices{"object-depth"};

  const ObjectIndex* object_depth{nullptr};
  const ObjectIndex* object_viewpoint{nullptr};
  const EmbeddingGrid* grid{nullptr};
  const Embedder* embedder{nullptr};

  GroundingContext grounding;
  EquivalenceConfig equivalence;

  const Tokenizer* tokenizer{nullptr};  // default whitespace when null
  int token_limit{77};
  const Proposer* proposer{nullptr};
  double proposal_threshold{kCosineProposalThreshold};  // test-embedder scale

  int threads{1};
};

struct ReportCellKey {
  std::string model;
  QueryType query_type;
  Method method;
  std::string index_variant;

  bool operator<(const ReportCellKey& other) const;
};

struct ReportCell {
  double mean_distance{0.0};
  int evaluated{0};  // records contributing to the mean
  int matches{0};
  int match_denominator{0};  // records with an object-match verdict
  int pending{0};            // needs-adjudication
  int failed{0};

  double match_rate() const {
    return match_denominator == 0 ? 0.0
                                  : static_cast<double>(matches) / match_denominator;
  }
};

struct Report {
  std::vector<PredictionRecord> records;
  std::map<ReportCellKey, ReportCell> cells;
};

/// Runs every (query, method, index) combination, optionally across a
/// worker pool. Per-record failures become failed records (excluded from
/// means, counted separately); output is independent of thread count.
Report evaluate(const EvaluationJob& job);

/// Recomputes the aggregate cells of a report from its records.
void aggregate_report(Report& report);

// Report writers/readers (report.cpp). The CSV header is fixed:
// query_id,scene_id,method,index,model,query_type,chosen_label,
// pred_x,pred_y,pred_z,object_match,distance,status,error
std::string report_to_csv(const Report& report);
void write_report_csv(const Report& report, const std::filesystem::path& path);
std::vector<PredictionRecord> read_report_csv(const std::filesystem::path& path);
std::string report_to_markdown(const Report& report);
void write_report_markdown(const Report& report, const std::filesystem::path& path);

}  // namespace cartier
