// Copyright 2026 The HybridEdge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hybridedge/kernels.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <system_error>
#include <unordered_map>

#include <fmt/format.h>

namespace hybridedge {

namespace fs = std::filesystem;

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV line; fields may be double-quoted with "" escapes.
std::vector<std::string> split_csv(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

bool UserIdLess::operator()(const std::string& a, const std::string& b) const {
  const bool da = all_digits(a), db = all_digits(b);
  if (da != db) return da;
  if (da) {
    const auto strip = [](const std::string& s) {
      std::string_view v = s;
      while (v.size() > 1 && v.front() == '0') v.remove_prefix(1);
      return v;
    };
    const auto va = strip(a), vb = strip(b);
    if (va.size() != vb.size()) return va.size() < vb.size();
    if (va != vb) return va < vb;
  }
  return a < b;
}

Expected<std::vector<ActivityRow>> parse_activity_csv(std::string_view text) {
  std::vector<ActivityRow> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  int col_id = -1, col_date = -1, col_steps = -1, col_dist = -1, col_cal = -1;
  std::size_t width = 0;
  bool have_header = false;

  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view line =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (trim(line).empty()) continue;

    auto fields = split_csv(line);
    if (!have_header) {
      for (int i = 0; i < static_cast<int>(fields.size()); ++i) {
        const auto& f = fields[i];
        if (f == "Id") col_id = i;
        else if (f == "ActivityDate") col_date = i;
        else if (f == "TotalSteps") col_steps = i;
        else if (f == "TotalDistance") col_dist = i;
        else if (f == "Calories") col_cal = i;
      }
      if (col_id < 0 || col_date < 0 || col_steps < 0 || col_dist < 0 || col_cal < 0)
        return fail(Errc::ParseError,
                    fmt::format("line {}: header must contain Id, ActivityDate, TotalSteps, "
                                "TotalDistance, Calories",
                                line_no));
      width = fields.size();
      have_header = true;
      continue;
    }

    if (fields.size() < width) return fail(Errc::MalformedRow, fmt::format("line {}", line_no));
    ActivityRow row;
    row.user_id = fields[col_id];
    row.activity_date = fields[col_date];
    if (row.user_id.empty() || !parse_number(fields[col_steps], row.total_steps) ||
        !parse_number(fields[col_dist], row.total_distance) ||
        !parse_number(fields[col_cal], row.calories))
      return fail(Errc::MalformedRow, fmt::format("line {}", line_no));
    rows.push_back(std::move(row));
  }
  if (!have_header) return fail(Errc::ParseError, "missing header row");
  return rows;
}

Expected<AggregateReport> stream_aggregate(const std::vector<ActivityRow>& rows) {
  if (rows.empty()) return fail(Errc::EmptyDataset);

  struct Acc {
    std::uint64_t sum = 0;
    std::uint64_t count = 0;
  };
  std::unordered_map<std::string, Acc> acc;
  for (const auto& r : rows) {
    auto& a = acc[r.user_id];
    a.sum += r.total_steps;
    ++a.count;
  }

  AggregateReport report;
  for (const auto& [user, a] : acc)
    report.per_user_mean_steps[user] = static_cast<double>(a.sum) / static_cast<double>(a.count);
  // The map iterates in id order, so a strict > keeps the smallest id on ties.
  bool first = true;
  for (const auto& [user, mean] : report.per_user_mean_steps) {
    if (first || mean > report.max_mean) {
      report.max_user = user;
      report.max_mean = mean;
      first = false;
    }
  }
  return report;
}

std::string report_to_csv(const AggregateReport& report) {
  std::string out = "Id,MeanSteps\n";
  for (const auto& [user, mean] : report.per_user_mean_steps) out += fmt::format("{},{}\n", user, mean);
  out += fmt::format("# max_user={},max_mean={}\n", report.max_user, report.max_mean);
  return out;
}

Expected<std::string> image_category(const AppClass& app) {
  switch (app.kind) {
    case AppKind::FaceDetect: return std::string("Face");
    case AppKind::CarDetect: return std::string("Vehicle");
    case AppKind::BodyDetect: return std::string("Body");
    case AppKind::ObjectDetect: return std::string("Object");
    default: break;
  }
  return fail(Errc::UnsupportedAppClass, to_string(app));
}

Expected<Artifact> image_tag(const fs::path& payload_ref, const AppClass& app,
                             const std::string& instance_id, const fs::path& out_dir) {
  auto category = image_category(app);
  if (!category) return unexpected(category.error());

  std::ifstream in(payload_ref, std::ios::binary);
  if (!in) return fail(Errc::UnreadablePayload, payload_ref.string());

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  Artifact artifact;
  artifact.name = fmt::format("{}_{}.jpg", *category, instance_id);
  artifact.path = out_dir / artifact.name;
  fs::copy_file(payload_ref, artifact.path, fs::copy_options::overwrite_existing, ec);
  if (ec) return fail(Errc::IoError, fmt::format("{}: {}", artifact.path.string(), ec.message()));
  return artifact;
}

}  // namespace hybridedge
