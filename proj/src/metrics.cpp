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

#include "hybridedge/metrics.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "hybridedge/json_codec.hpp"

namespace hybridedge {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename Get>
std::optional<MetricStats> stats_of(const std::vector<const MetricsRecord*>& rs, Get get) {
  if (rs.empty()) return std::nullopt;
  MetricStats s{0, get(*rs.front()), get(*rs.front())};
  double sum = 0;
  for (const auto* r : rs) {
    const double v = get(*r);
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / static_cast<double>(rs.size());
  return s;
}

std::string stats_line(std::string_view name, const std::optional<MetricStats>& s) {
  if (!s) return fmt::format("  {:<14} -\n", name);
  return fmt::format("  {:<14} mean {:.4f}  min {:.4f}  max {:.4f}\n", name, s->mean, s->min, s->max);
}

}  // namespace

MetricsLog::MetricsLog(const std::filesystem::path& file) {
  file_.emplace(file, std::ios::app);
}

bool MetricsLog::append(const MetricsRecord& record, int attempt) {
  if (!seen_.emplace(record.instance_id, attempt).second) {
    ++duplicates_;
    return false;
  }
  entries_.push_back({record, attempt});
  lines_.push_back(json{{"attempt", attempt}, {"record", record}}.dump());
  if (file_) {
    *file_ << lines_.back() << '\n';
    file_->flush();
  }
  return true;
}

std::vector<MetricsRecord> MetricsLog::records() const {
  std::vector<MetricsRecord> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.record);
  return out;
}

Expected<MetricsLog> MetricsLog::replay(std::string_view text) {
  MetricsLog log;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      log.append(j.at("record").get<MetricsRecord>(), j.value("attempt", 0));
    } catch (const json::exception& e) {
      return fail(Errc::ParseError, fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return log;
}

bool MetricsFilter::matches(const MetricsRecord& r) const {
  if (workload_id && r.workload_id != *workload_id) return false;
  if (flavor && r.runtime_class.flavor != *flavor) return false;
  if (node && r.node_id != *node) return false;
  if (app_class && r.app_class != *app_class) return false;
  if (kind && r.runtime_class.kind != *kind) return false;
  return true;
}

Expected<MetricsFilter> parse_filter(std::string_view text) {
  MetricsFilter f;
  text = trim(text);
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto clause = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (clause.empty()) continue;
    const auto eq = clause.find('=');
    if (eq == std::string_view::npos) return fail(Errc::UnknownFilterField, std::string(clause));
    const auto key = trim(clause.substr(0, eq));
    const std::string value(trim(clause.substr(eq + 1)));
    if (key == "workload_id" || key == "workload") {
      f.workload_id = value;
    } else if (key == "flavor") {
      f.flavor = value;
    } else if (key == "node" || key == "node_id") {
      f.node = value;
    } else if (key == "app_class") {
      f.app_class = parse_app_class(value);
    } else if (key == "kind") {
      f.kind = parse_runtime_kind(value);
      if (!f.kind) return fail(Errc::UnknownFilterField, "kind=" + value);
    } else {
      return fail(Errc::UnknownFilterField, std::string(key));
    }
  }
  return f;
}

Summary summarize(const std::vector<MetricsRecord>& records, const MetricsFilter& filter) {
  Summary s;
  std::vector<const MetricsRecord*> ok;
  for (const auto& r : records) {
    if (!filter.matches(r)) continue;
    ++s.count;
    if (r.outcome.success) {
      ++s.success_count;
      ok.push_back(&r);
    } else {
      ++s.failure_count;
    }
  }
  s.cpu_avg_pct = stats_of(ok, [](const MetricsRecord& r) { return r.cpu_avg_pct; });
  s.mem_peak_mb = stats_of(ok, [](const MetricsRecord& r) { return r.mem_peak_mb; });
  s.proc_time_ms = stats_of(ok, [](const MetricsRecord& r) { return r.proc_time_ms; });
  s.boot_ms = stats_of(ok, [](const MetricsRecord& r) { return r.boot_ms; });
  return s;
}

Expected<ComparisonReport> compare(const std::vector<MetricsRecord>& a,
                                   const std::vector<MetricsRecord>& b, std::string label_a,
                                   std::string label_b) {
  const Summary sa = summarize(a), sb = summarize(b);
  if (sa.success_count == 0) return fail(Errc::EmptySet, "A");
  if (sb.success_count == 0) return fail(Errc::EmptySet, "B");

  ComparisonReport r;
  r.label_a = std::move(label_a);
  r.label_b = std::move(label_b);
  r.count_a = sa.success_count;
  r.count_b = sb.success_count;
  r.cpu_mean_a = sa.cpu_avg_pct->mean;
  r.cpu_mean_b = sb.cpu_avg_pct->mean;
  r.mem_mean_a = sa.mem_peak_mb->mean;
  r.mem_mean_b = sb.mem_peak_mb->mean;
  r.time_mean_a = sa.proc_time_ms->mean;
  r.time_mean_b = sb.proc_time_ms->mean;
  r.mem_saving_pct = *mem_saving_pct(r.mem_mean_a, r.mem_mean_b);
  r.proc_time_delta_ms = r.time_mean_b - r.time_mean_a;

  const char* lighter = r.mem_mean_b < r.mem_mean_a   ? "B lighter"
                        : r.mem_mean_a < r.mem_mean_b ? "A lighter"
                                                      : "equal memory";
  const char* faster = r.time_mean_a < r.time_mean_b   ? "A faster"
                       : r.time_mean_b < r.time_mean_a ? "B faster"
                                                       : "equal time";
  r.verdict = fmt::format("{}, {}", lighter, faster);
  return r;
}

json summary_to_json(const Summary& s) {
  json j{{"count", s.count}, {"success_count", s.success_count}, {"failure_count", s.failure_count}};
  auto put = [&j](const char* name, const std::optional<MetricStats>& m) {
    j[name] = m ? json{{"mean", m->mean}, {"min", m->min}, {"max", m->max}} : json(nullptr);
  };
  put("cpu_avg_pct", s.cpu_avg_pct);
  put("mem_peak_mb", s.mem_peak_mb);
  put("proc_time_ms", s.proc_time_ms);
  put("boot_ms", s.boot_ms);
  return j;
}

json report_to_json(const ComparisonReport& r) {
  return {{"a", {{"label", r.label_a}, {"count", r.count_a}, {"cpu_avg_pct", r.cpu_mean_a},
                 {"mem_peak_mb", r.mem_mean_a}, {"proc_time_ms", r.time_mean_a}}},
          {"b", {{"label", r.label_b}, {"count", r.count_b}, {"cpu_avg_pct", r.cpu_mean_b},
                 {"mem_peak_mb", r.mem_mean_b}, {"proc_time_ms", r.time_mean_b}}},
          {"mem_saving_pct", r.mem_saving_pct},
          {"proc_time_delta_ms", r.proc_time_delta_ms},
          {"verdict", r.verdict}};
}

std::string format_summary(const Summary& s) {
  std::string out = fmt::format("records {} (success {}, failure {})\n", s.count, s.success_count,
                                s.failure_count);
  out += stats_line("cpu_avg_pct", s.cpu_avg_pct);
  out += stats_line("mem_peak_mb", s.mem_peak_mb);
  out += stats_line("proc_time_ms", s.proc_time_ms);
  out += stats_line("boot_ms", s.boot_ms);
  return out;
}

std::string format_report(const ComparisonReport& r) {
  std::string out;
  out += fmt::format("{:<16} {:>12} {:>12}\n", "", "A: " + r.label_a, "B: " + r.label_b);
  out += fmt::format("{:<16} {:>12} {:>12}\n", "records", r.count_a, r.count_b);
  out += fmt::format("{:<16} {:>12.4f} {:>12.4f}\n", "cpu_avg_pct", r.cpu_mean_a, r.cpu_mean_b);
  out += fmt::format("{:<16} {:>12.4f} {:>12.4f}\n", "mem_peak_mb", r.mem_mean_a, r.mem_mean_b);
  out += fmt::format("{:<16} {:>12.4f} {:>12.4f}\n", "proc_time_ms", r.time_mean_a, r.time_mean_b);
  out += fmt::format("mem_saving_pct      {:.2f} %\n", r.mem_saving_pct);
  out += fmt::format("proc_time_delta_ms  {:+.4f}\n", r.proc_time_delta_ms);
  out += fmt::format("verdict             {}\n", r.verdict);
  return out;
}

}  // namespace hybridedge
