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

#include <charconv>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "cartier/evaluation.hpp"

namespace cartier {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kCsvHeader =
    "query_id,scene_id,method,index,model,query_type,chosen_label,"
    "pred_x,pred_y,pred_z,object_match,distance,status,error";

// Shortest round-trip double representation; bit-stable across runs.
std::string format_double(double value) {
  char buf[32];
  const auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

double parse_double(const std::string& s, const fs::path& path, int line_no) {
  double value = 0.0;
  const auto result = std::from_chars(s.data(), s.data() + s.size(), value);
  if (result.ec != std::errc() || result.ptr != s.data() + s.size()) {
    throw Error(Errc::MalformedRecord,
                path.string() + ":" + std::to_string(line_no) + ": bad number \"" + s + "\"");
  }
  return value;
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\n\r") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line, const fs::path& path, int line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"' && current.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  if (quoted) {
    throw Error(Errc::MalformedRecord,
                path.string() + ":" + std::to_string(line_no) + ": unterminated quote");
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string method_column_title(Method method, const std::string& index_variant) {
  switch (method) {
    case Method::Cartier: return "cartier/" + index_variant;
    case Method::DirectIndex: return "direct-index";
    case Method::ProposalThreshold: return "proposal-threshold";
  }
  return "?";
}

}  // namespace

std::string report_to_csv(const Report& report) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const PredictionRecord& r : report.records) {
    out += csv_escape(r.query_id);
    out += ',';
    out += csv_escape(r.scene_id);
    out += ',';
    out += to_string(r.method);
    out += ',';
    out += csv_escape(r.index_variant);
    out += ',';
    out += csv_escape(r.model);
    out += ',';
    out += to_string(r.query_type);
    out += ',';
    out += csv_escape(r.chosen_label.value_or(""));
    out += ',';
    if (r.failed) {
      out += ",,";  // no predicted point
    } else {
      out += format_double(r.predicted.p.x());
      out += ',';
      out += format_double(r.predicted.p.y());
      out += ',';
      out += format_double(r.predicted.p.z());
    }
    out += ',';
    if (r.match) out += to_string(*r.match);
    out += ',';
    if (!r.failed) out += format_double(r.distance);
    out += ',';
    out += r.failed ? "failed" : "ok";
    out += ',';
    out += csv_escape(r.error);
    out += '\n';
  }
  return out;
}

void write_report_csv(const Report& report, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(Errc::MissingFile, "cannot open for writing: " + path.string());
  }
  out << report_to_csv(report);
}

std::vector<PredictionRecord> read_report_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(Errc::MissingFile, path.string());
  }
  std::string line;
  int line_no = 0;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw Error(Errc::MalformedRecord, path.string() + ": unexpected CSV header");
  }
  ++line_no;

  std::vector<PredictionRecord> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = csv_split(line, path, line_no);
    if (f.size() != 14) {
      throw Error(Errc::MalformedRecord, path.string() + ":" + std::to_string(line_no) +
                                             ": expected 14 fields, got " +
                                             std::to_string(f.size()));
    }
    PredictionRecord r;
    r.query_id = f[0];
    r.scene_id = f[1];
    r.method = method_from_string(f[2]);
    r.index_variant = f[3];
    r.model = f[4];
    r.query_type = query_type_from_string(f[5]);
    if (!f[6].empty()) r.chosen_label = f[6];
    r.failed = f[12] == "failed";
    if (!r.failed) {
      r.predicted = WorldPoint{Vec3(parse_double(f[7], path, line_no),
                                    parse_double(f[8], path, line_no),
                                    parse_double(f[9], path, line_no))};
      r.distance = parse_double(f[11], path, line_no);
    }
    if (!f[10].empty()) r.match = match_state_from_string(f[10]);
    r.error = f[13];
    records.push_back(std::move(r));
  }
  return records;
}

std::string report_to_markdown(const Report& report) {
  // Rows: model x query type. Columns: method/index combinations.
  std::set<std::pair<std::string, QueryType>> rows;
  std::set<std::pair<Method, std::string>> column_keys;
  for (const auto& [key, cell] : report.cells) {
    rows.insert({key.model, key.query_type});
    column_keys.insert({key.method, key.index_variant});
  }

  std::ostringstream md;
  md << "| Model | Type |";
  for (const auto& [method, variant] : column_keys) {
    md << " " << method_column_title(method, variant) << " |";
  }
  md << "\n|---|---|";
  for (std::size_t i = 0; i < column_keys.size(); ++i) {
    md << "---|";
  }
  md << "\n";

  char buf[128];
  for (const auto& [model, type] : rows) {
    md << "| " << model << " | " << to_string(type) << " |";
    for (const auto& [method, variant] : column_keys) {
      const auto it = report.cells.find(ReportCellKey{model, type, method, variant});
      if (it == report.cells.end()) {
        md << " - |";
        continue;
      }
      const ReportCell& cell = it->second;
      if (cell.evaluated == 0) {
        std::snprintf(buf, sizeof(buf), " failed: %d |", cell.failed);
        md << buf;
        continue;
      }
      std::snprintf(buf, sizeof(buf), " %.3f m", cell.mean_distance);
      md << buf;
      if (cell.match_denominator > 0) {
        std::snprintf(buf, sizeof(buf), ", %.0f%% match", 100.0 * cell.match_rate());
        md << buf;
      }
      if (cell.pending > 0) {
        std::snprintf(buf, sizeof(buf), ", %d pending", cell.pending);
        md << buf;
      }
      if (cell.failed > 0) {
        std::snprintf(buf, sizeof(buf), ", %d failed", cell.failed);
        md << buf;
      }
      std::snprintf(buf, sizeof(buf), " (n=%d) |", cell.evaluated);
      md << buf;
    }
    md << "\n";
  }
  return md.str();
}

void write_report_markdown(const Report& report, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw Error(Errc::MissingFile, "cannot open for writing: " + path.string());
  }
  out << report_to_markdown(report);
}

}  // namespace cartier
