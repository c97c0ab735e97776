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

#include "cartier/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace cartier {

namespace fs = std::filesystem;
using nlohmann::json;

void EquivalenceConfig::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& group : synonym_groups) {
    for (const std::string& label : group) {
      if (!seen.insert(normalize_label(label)).second) {
        throw Error(Errc::InvalidArgument,
                    "label \"" + label + "\" appears in two synonym groups");
      }
    }
  }
}

namespace {

std::string_view colocation_status_name(EquivalenceConfig::ColocationStatus s) {
  switch (s) {
    case EquivalenceConfig::ColocationStatus::Accept: return "accept";
    case EquivalenceConfig::ColocationStatus::Reject: return "reject";
    case EquivalenceConfig::ColocationStatus::Ambiguous: return "ambiguous";
  }
  return "ambiguous";
}

EquivalenceConfig::ColocationStatus colocation_status_from(std::string_view s) {
  if (s == "accept") return EquivalenceConfig::ColocationStatus::Accept;
  if (s == "reject") return EquivalenceConfig::ColocationStatus::Reject;
  if (s == "ambiguous") return EquivalenceConfig::ColocationStatus::Ambiguous;
  throw Error(Errc::MalformedRecord, "unknown colocation status: " + std::string(s));
}

}  // namespace

EquivalenceConfig EquivalenceConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::MissingFile, path.string());
  }
  EquivalenceConfig eq;
  try {
    const json j = json::parse(in);
    for (const auto& group : j.value("synonyms", json::array())) {
      eq.synonym_groups.push_back(group.get<std::vector<std::string>>());
    }
    for (const auto& c : j.value("colocations", json::array())) {
      eq.colocations.push_back(Colocation{
          c.at("predicted").get<std::string>(), c.at("target").get<std::string>(),
          colocation_status_from(c.at("status").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
  eq.validate();
  return eq;
}

void EquivalenceConfig::save(const fs::path& path) const {
  json j;
  j["synonyms"] = synonym_groups;
  j["colocations"] = json::array();
  for (const Colocation& c : colocations) {
    j["colocations"].push_back({{"predicted", c.predicted},
                                {"target", c.target},
                                {"status", std::string(colocation_status_name(c.status))}});
  }
  std::ofstream out(path);
  if (!out) {
    throw Error(Errc::MissingFile, "cannot open for writing: " + path.string());
  }
  out << j.dump(2) << "\n";
}

std::string_view to_string(MatchState m) {
  switch (m) {
    case MatchState::Match: return "match";
    case MatchState::NoMatch: return "no-match";
    case MatchState::NeedsAdjudication: return "needs-adjudication";
  }
  return "no-match";
}

MatchState match_state_from_string(std::string_view s) {
  if (s == "match") return MatchState::Match;
  if (s == "no-match") return MatchState::NoMatch;
  if (s == "needs-adjudication") return MatchState::NeedsAdjudication;
  throw Error(Errc::MalformedRecord, "unknown match state: " + std::string(s));
}

MatchState object_match(std::string_view predicted, const std::vector<std::string>& plausible,
                        const EquivalenceConfig& eq) {
  // Synonym canonicalization: every member maps to its group's first label.
  auto canonical = [&eq](std::string_view label) {
    const std::string norm = normalize_label(label);
    for (const auto& group : eq.synonym_groups) {
      for (const std::string& member : group) {
        if (normalize_label(member) == norm) return normalize_label(group.front());
      }
    }
    return norm;
  };

  const std::string pred = canonical(predicted);
  std::unordered_set<std::string> targets;
  for (const std::string& label : plausible) {
    targets.insert(canonical(label));
  }
  if (targets.count(pred)) return MatchState::Match;

  MatchState verdict = MatchState::NoMatch;
  for (const auto& c : eq.colocations) {
    if (canonical(c.predicted) != pred || !targets.count(canonical(c.target))) continue;
    switch (c.status) {
      case EquivalenceConfig::ColocationStatus::Accept:
        return MatchState::Match;
      case EquivalenceConfig::ColocationStatus::Ambiguous:
        verdict = MatchState::NeedsAdjudication;
        break;
      case EquivalenceConfig::ColocationStatus::Reject:
        break;
    }
  }
  return verdict;
}

double distance_metric(const WorldPoint& predicted, const SceneTruth& truth,
                       const std::vector<std::string>& plausible) {
  if (plausible.empty()) {
    throw Error(Errc::InvalidArgument, "plausible set is empty");
  }
  std::unordered_set<std::string> wanted;
  for (const std::string& label : plausible) {
    wanted.insert(normalize_label(label));
  }
  double best = std::numeric_limits<double>::infinity();
  std::unordered_set<std::string> found;
  for (const SceneObject& obj : truth.objects) {
    const std::string norm = normalize_label(obj.label);
    if (!wanted.count(norm)) continue;
    found.insert(norm);
    best = std::min(best, point_to_aabb_distance(predicted, obj.box));
  }
  for (const std::string& norm : wanted) {
    if (!found.count(norm)) {
      throw Error(Errc::UnknownPlausibleLabel,
                  "\"" + norm + "\" names no object in scene " + truth.scene_id);
    }
  }
  return best;
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::Cartier: return "cartier";
    case Method::DirectIndex: return "direct-index";
    case Method::ProposalThreshold: return "proposal-threshold";
  }
  return "cartier";
}

Method method_from_string(std::string_view s) {
  if (s == "cartier") return Method::Cartier;
  if (s == "direct-index") return Method::DirectIndex;
  if (s == "proposal-threshold") return Method::ProposalThreshold;
  throw Error(Errc::InvalidArgument, "unknown method: " + std::string(s));
}

std::vector<std::string> Tokenizer::tokenize(std::string_view text) const {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::string truncate_tokens(std::string_view text, const Tokenizer& tokenizer, int limit) {
  std::vector<std::string> tokens = tokenizer.tokenize(text);
  if (static_cast<int>(tokens.size()) > limit) {
    tokens.resize(limit);
  }
  std::string out;
  for (const std::string& token : tokens) {
    if (!out.empty()) out += ' ';
    out += token;
  }
  return out;
}

PredictionRecord run_direct_index(const Query& query, const SceneTruth& truth,
                                  const EmbeddingGrid& grid, const Embedder& embedder,
                                  const std::string& model, const Tokenizer& tokenizer,
                                  int token_limit) {
  PredictionRecord record;
  record.query_id = query.query_id;
  record.scene_id = truth.scene_id;
  record.method = Method::DirectIndex;
  record.index_variant = "embedding-grid";
  record.model = model;
  record.query_type = query.type;

  const std::string truncated = truncate_tokens(query.text, tokenizer, token_limit);
  record.predicted = query_grid(grid, truncated, embedder).point;
  record.distance = distance_metric(record.predicted, truth, query.plausible_labels);
  // No text answer is produced, so the object-match metric does not apply.
  return record;
}

FileProposer::FileProposer(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::MissingFile, path.string());
  }
  try {
    const json j = json::parse(in);
    for (const auto& [key, value] : j.items()) {
      auto list = value.get<std::vector<std::string>>();
      if (key == "default") {
        fallback_ = std::move(list);
      } else {
        by_query_.emplace(key, std::move(list));
      }
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MalformedRecord, path.string() + ": " + e.what());
  }
}

std::vector<std::string> FileProposer::propose(const Query& query) const {
  const auto it = by_query_.find(query.query_id);
  return it == by_query_.end() ? fallback_ : it->second;
}

PredictionRecord run_proposal_threshold(const Query& query, const SceneTruth& truth,
                                        const EmbeddingGrid& grid, const Embedder& embedder,
                                        const Proposer& proposer, const GroundingContext& ctx,
                                        const EquivalenceConfig& eq, double threshold) {
  PredictionRecord record;
  record.query_id = query.query_id;
  record.scene_id = truth.scene_id;
  record.method = Method::ProposalThreshold;
  record.index_variant = "embedding-grid";
  record.model = ctx.backend->identity();
  record.query_type = query.type;

  // Deduplicate, keeping proposal order.
  std::vector<std::string> proposals;
  std::unordered_set<std::string> seen;
  for (std::string& p : proposer.propose(query)) {
    if (seen.insert(normalize_label(p)).second) proposals.push_back(std::move(p));
  }

  std::vector<std::string> survivors;
  for (const std::string& proposal : proposals) {
    const IndexEntry entry = query_grid(grid, proposal, embedder);
    if (entry.score >= threshold) survivors.push_back(proposal);
  }
  if (survivors.empty()) {
    std::string message = "0 of " + std::to_string(proposals.size()) +
                          " proposals reached similarity " + std::to_string(threshold);
    if (threshold > 1.0) {
      message += " (warning: threshold exceeds the cosine similarity upper bound of 1; "
                 "it presumes an unnormalized similarity scale)";
    }
    throw Error(Errc::NoSurvivingProposals, message);
  }

  // Survivors replace the detector vocabulary in the standard prompt.
  const GroundingResult grounded = ground_query(survivors, query.text, ctx, grid, embedder);
  record.chosen_label = grounded.label;
  record.predicted = grounded.point;
  record.match = object_match(grounded.label, query.plausible_labels, eq);
  record.distance = distance_metric(record.predicted, truth, query.plausible_labels);
  return record;
}

bool ReportCellKey::operator<(const ReportCellKey& other) const {
  if (model != other.model) return model < other.model;
  if (query_type != other.query_type) return query_type < other.query_type;
  if (method != other.method) return method < other.method;
  return index_variant < other.index_variant;
}

void aggregate_report(Report& report) {
  report.cells.clear();
  for (const PredictionRecord& record : report.records) {
    ReportCell& cell = report.cells[ReportCellKey{record.model, record.query_type,
                                                  record.method, record.index_variant}];
    if (record.failed) {
      ++cell.failed;
      continue;
    }
    cell.mean_distance += record.distance;
    ++cell.evaluated;
    if (record.match) {
      if (*record.match == MatchState::NeedsAdjudication) {
        ++cell.pending;
      } else {
        ++cell.match_denominator;
        if (*record.match == MatchState::Match) ++cell.matches;
      }
    }
  }
  for (auto& [key, cell] : report.cells) {
    if (cell.evaluated > 0) cell.mean_distance /= cell.evaluated;
  }
}

namespace {

struct WorkItem {
  const Query* query;
  Method method;
  std::string index_variant;
};

PredictionRecord evaluate_one(const EvaluationJob& job, const WorkItem& item) {
  const Query& query = *item.query;
  PredictionRecord record;
  record.query_id = query.query_id;
  record.scene_id = job.truth->scene_id;
  record.method = item.method;
  record.index_variant = item.index_variant;
  record.model = job.grounding.backend ? job.grounding.backend->identity() : "";
  record.query_type = query.type;

  static const Tokenizer kDefaultTokenizer;
  const Tokenizer& tokenizer = job.tokenizer ? *job.tokenizer : kDefaultTokenizer;

  try {
    switch (item.method) {
      case Method::Cartier: {
        GroundingResult grounded;
        if (item.index_variant == "embedding-grid") {
          grounded =
              ground_query(job.vocabulary, query.text, job.grounding, *job.grid, *job.embedder);
        } else {
          const ObjectIndex* index = item.index_variant == "object-depth"
                                         ? job.object_depth
                                         : job.object_viewpoint;
          grounded = ground_query(job.vocabulary, query.text, job.grounding, *index);
        }
        record.chosen_label = grounded.label;
        record.predicted = grounded.point;
        record.match = object_match(grounded.label, query.plausible_labels, job.equivalence);
        record.distance = distance_metric(record.predicted, *job.truth, query.plausible_labels);
        break;
      }
      case Method::DirectIndex:
        record = run_direct_index(query, *job.truth, *job.grid, *job.embedder, record.model,
                                  tokenizer, job.token_limit);
        break;
      case Method::ProposalThreshold:
        record = run_proposal_threshold(query, *job.truth, *job.grid, *job.embedder,
                                        *job.proposer, job.grounding, job.equivalence,
                                        job.proposal_threshold);
        break;
    }
  } catch (const Error& e) {
    record.failed = true;
    record.error = e.what();
    record.chosen_label.reset();
    record.match.reset();
    record.distance = 0.0;
    record.predicted = WorldPoint{};
  }
  return record;
}

}  // namespace

Report evaluate(const EvaluationJob& job) {
  if (job.truth == nullptr || job.queries == nullptr) {
    throw Error(Errc::InvalidArgument, "evaluation needs a scene and queries");
  }
  for (Method method : job.methods) {
    if (method == Method::Cartier) {
      for (const std::string& variant : job.cartier_indices) {
        if (variant == "object-depth" && job.object_depth == nullptr) {
          throw Error(Errc::InvalidArgument, "object-depth index not supplied");
        }
        if (variant == "object-viewpoint" && job.object_viewpoint == nullptr) {
          throw Error(Errc::InvalidArgument, "object-viewpoint index not supplied");
        }
        if (variant == "embedding-grid" && (job.grid == nullptr || job.embedder == nullptr)) {
          throw Error(Errc::InvalidArgument, "embedding grid not supplied");
        }
      }
    } else if (job.grid == nullptr || job.embedder == nullptr) {
      throw Error(Errc::InvalidArgument,
                  std::string(to_string(method)) + " needs the embedding grid");
    } else if (method == Method::ProposalThreshold && job.proposer == nullptr) {
      throw Error(Errc::InvalidArgument, "proposal-threshold needs a proposer");
    }
  }

  // Fixed enumeration order keeps the report independent of scheduling.
  std::vector<WorkItem> items;
  for (const Query& query : *job.queries) {
    for (Method method : job.methods) {
      if (method == Method::Cartier) {
        for (const std::string& variant : job.cartier_indices) {
          items.push_back(WorkItem{&query, method, variant});
        }
      } else {
        items.push_back(WorkItem{&query, method, "embedding-grid"});
      }
    }
  }

  Report report;
  report.records.resize(items.size());
  const int thread_count = std::max(1, job.threads);
  if (thread_count == 1) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      report.records[i] = evaluate_one(job, items[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(thread_count);
    for (int t = 0; t < thread_count; ++t) {
      workers.emplace_back([&] {
        for (std::size_t i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
          report.records[i] = evaluate_one(job, items[i]);
        }
      });
    }
    for (std::thread& worker : workers) {
      worker.join();
    }
  }

  aggregate_report(report);
  return report;
}

}  // namespace cartier
