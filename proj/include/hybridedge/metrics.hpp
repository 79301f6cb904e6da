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

// Append-only metrics log, per-metric summaries, and A/B comparison reports.

#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hybridedge/model.hpp"

namespace hybridedge {

struct LoggedMetrics {
  MetricsRecord record;
  int attempt = 0;
};

/// One JSON object per line: {"attempt": n, "record": {...}}. Each
/// (instance_id, attempt) is stored at most once.
class MetricsLog {
 public:
  MetricsLog() = default;
  /// Also appends every stored line to `file`.
  explicit MetricsLog(const std::filesystem::path& file);

  /// False when (instance_id, attempt) was already stored.
  bool append(const MetricsRecord& record, int attempt);

  const std::vector<LoggedMetrics>& entries() const { return entries_; }
  std::vector<MetricsRecord> records() const;
  std::size_t duplicates() const { return duplicates_; }
  const std::vector<std::string>& lines() const { return lines_; }

  /// Rebuilds a log from its line form.
  static Expected<MetricsLog> replay(std::string_view text);

 private:
  std::vector<LoggedMetrics> entries_;
  std::vector<std::string> lines_;
  std::set<std::pair<std::string, int>> seen_;
  std::size_t duplicates_ = 0;
  std::optional<std::ofstream> file_;
};

struct MetricsFilter {
  std::optional<std::string> workload_id;
  std::optional<std::string> flavor;
  std::optional<std::string> node;
  std::optional<AppClass> app_class;
  std::optional<RuntimeKind> kind;

  bool matches(const MetricsRecord& r) const;
};

/// "key=value[,key=value...]" over workload_id, flavor, app_class, node and
/// kind. Blank text matches everything.
Expected<MetricsFilter> parse_filter(std::string_view text);

struct MetricStats {
  double mean = 0;
  double min = 0;
  double max = 0;
};

struct Summary {
  std::size_t count = 0;  // every matching record
  std::size_t success_count = 0;
  std::size_t failure_count = 0;
  // Over Success records only; empty when there are none.
  std::optional<MetricStats> cpu_avg_pct;
  std::optional<MetricStats> mem_peak_mb;
  std::optional<MetricStats> proc_time_ms;
  std::optional<MetricStats> boot_ms;
};

Summary summarize(const std::vector<MetricsRecord>& records, const MetricsFilter& filter = {});

struct ComparisonReport {
  std::string label_a = "A";
  std::string label_b = "B";
  std::size_t count_a = 0;  // Success records used
  std::size_t count_b = 0;
  double cpu_mean_a = 0, cpu_mean_b = 0;
  double mem_mean_a = 0, mem_mean_b = 0;
  double time_mean_a = 0, time_mean_b = 0;
  double mem_saving_pct = 0;      // of B relative to A
  double proc_time_delta_ms = 0;  // B - A
  std::string verdict;            // e.g. "B lighter, A faster"
};

/// EmptySet("A"/"B") when a side has no Success records.
Expected<ComparisonReport> compare(const std::vector<MetricsRecord>& a,
                                   const std::vector<MetricsRecord>& b,
                                   std::string label_a = "A", std::string label_b = "B");

nlohmann::json summary_to_json(const Summary& s);
nlohmann::json report_to_json(const ComparisonReport& r);

std::string format_summary(const Summary& s);
std::string format_report(const ComparisonReport& r);

}  // namespace hybridedge
