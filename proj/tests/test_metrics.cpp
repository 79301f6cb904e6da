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

#include <cmath>

#include <doctest.h>

#include "hybridedge/metrics.hpp"
#include "support.hpp"

using namespace hybridedge;

namespace {

MetricsRecord rec(const std::string& id, const std::string& flavor, double mem, double time, bool ok = true) {
  MetricsRecord r;
  r.instance_id = id;
  r.workload_id = flavor == "docker" ? "container" : "hybrid";
  r.node_id = "w1";
  r.runtime_class = {flavor == "docker" ? RuntimeKind::Container : RuntimeKind::Unikernel, flavor};
  r.app_class = AppClass::of(AppKind::StreamAggregate);
  r.cpu_avg_pct = 0.2;
  r.mem_peak_mb = mem;
  r.proc_time_ms = time;
  r.outcome = ok ? Outcome::ok() : Outcome::failure("boom");
  return r;
}

}  // namespace

TEST_CASE("summarize means") {
  auto s = summarize({rec("a", "docker", 71, 1.6), rec("b", "docker", 71, 1.8)});
  CHECK(s.count == 2);
  REQUIRE(s.proc_time_ms);
  CHECK(s.proc_time_ms->mean == doctest::Approx(1.7));
  CHECK(s.proc_time_ms->min == 1.6);
  CHECK(s.proc_time_ms->max == 1.8);
}

TEST_CASE("summarize with no match") {
  MetricsFilter f;
  f.flavor = "osv";
  auto s = summarize({rec("a", "docker", 71, 1.6)}, f);
  CHECK(s.count == 0);
  CHECK_FALSE(s.mem_peak_mb);
}

TEST_CASE("summarize excludes failures from means") {
  auto s = summarize({rec("a", "docker", 70, 1), rec("b", "docker", 1000, 50, false)});
  CHECK(s.count == 2);
  CHECK(s.success_count == 1);
  CHECK(s.failure_count == 1);
  CHECK(s.mem_peak_mb->mean == 70);
}

TEST_CASE("compare the datasci pair") {
  std::vector<MetricsRecord> a{rec("a0", "docker", 71, 1.7), rec("a1", "docker", 71, 1.7)};
  std::vector<MetricsRecord> b{rec("b0", "unikraft", 45, 2.05)};
  auto r = compare(a, b, "container", "hybrid").value();
  CHECK(std::abs(r.mem_saving_pct - 36.62) <= 0.01);
  CHECK(std::abs(r.proc_time_delta_ms - 0.35) <= 1e-9);
  CHECK(r.verdict == "B lighter, A faster");
  CHECK(r.count_a == 2);
  CHECK(r.count_b == 1);
  CHECK(format_report(r).find("36.62") != std::string::npos);
  CHECK(report_to_json(r)["verdict"] == "B lighter, A faster");
}

TEST_CASE("compare identical sides") {
  std::vector<MetricsRecord> a{rec("a0", "docker", 71, 1.7)};
  auto r = compare(a, a).value();
  CHECK(r.mem_saving_pct == 0);
  CHECK(r.proc_time_delta_ms == 0);
  CHECK(r.verdict == "equal memory, equal time");
}

TEST_CASE("compare empty sides") {
  std::vector<MetricsRecord> a{rec("a0", "docker", 71, 1.7)};
  auto e = compare(a, {});
  REQUIRE_FALSE(e);
  CHECK(e.error() == Error{Errc::EmptySet, "B"});
  CHECK(compare({rec("x", "docker", 1, 1, false)}, a).error() == Error{Errc::EmptySet, "A"});
}

TEST_CASE("parse_filter") {
  auto f = parse_filter("workload=hybrid, flavor=unikraft,app_class=StreamAggregate,kind=Unikernel,node=w1");
  REQUIRE(f);
  CHECK(f->workload_id == "hybrid");
  CHECK(f->kind == RuntimeKind::Unikernel);
  CHECK(f->matches(rec("b", "unikraft", 45, 2)));
  CHECK_FALSE(f->matches(rec("a", "docker", 45, 2)));
  CHECK(parse_filter("")->matches(rec("a", "docker", 1, 1)));
  CHECK(parse_filter("colour=red").error().code == Errc::UnknownFilterField);
  CHECK_FALSE(parse_filter("flavor"));
}

TEST_CASE("MetricsLog dedups and replays") {
  MetricsLog log;
  CHECK(log.append(rec("a", "docker", 71, 1.7), 0));
  CHECK(log.append(rec("a", "docker", 71, 1.7), 1));
  CHECK_FALSE(log.append(rec("a", "docker", 71, 1.7), 0));
  CHECK(log.duplicates() == 1);
  CHECK(log.lines().size() == 2);
  std::string text;
  for (const auto& l : log.lines()) text += l + "\n";
  auto back = MetricsLog::replay(text);
  REQUIRE(back);
  CHECK(back->records() == log.records());
  CHECK(back->lines() == log.lines());
  auto bad = MetricsLog::replay(text + "{oops\n");
  REQUIRE_FALSE(bad);
  CHECK(bad.error().code == Errc::ParseError);
  CHECK(bad.error().detail.find("line 3") != std::string::npos);
}

TEST_CASE("summary json and text") {
  auto s = summarize({rec("a", "docker", 71, 1.7)});
  auto j = summary_to_json(s);
  CHECK(j["count"] == 1);
  CHECK(j["mem_peak_mb"]["mean"] == 71);
  CHECK(format_summary(s).find("71") != std::string::npos);
}
