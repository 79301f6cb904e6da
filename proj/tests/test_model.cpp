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

#include "hybridedge/json_codec.hpp"
#include "hybridedge/model.hpp"
#include "support.hpp"

using namespace hybridedge;
using hybridedge::testing::spec;
using hybridedge::testing::worker;

TEST_CASE("validate_workload reports ZeroInstances") {
  auto s = spec("w", Payload::image(), AppClass::of(AppKind::CarDetect), 0);
  auto v = validate_workload(s, {});
  REQUIRE_FALSE(v);
  REQUIRE(v.error().size() == 1);
  CHECK(v.error()[0].code == Errc::ZeroInstances);
  CHECK(v.error()[0].detail == "instances");
}

TEST_CASE("validate_workload reports EmptyId") {
  auto v = validate_workload(spec("", Payload::image(), AppClass::of(AppKind::CarDetect)), {});
  REQUIRE_FALSE(v);
  CHECK(v.error()[0].code == Errc::EmptyId);
}

TEST_CASE("validate_workload lists every violation") {
  auto s = spec("", Payload::image(), AppClass::of(AppKind::CarDetect), 0);
  s.est_mem_mb = -1;
  auto v = validate_workload(s, {});
  REQUIRE_FALSE(v);
  CHECK(v.error().size() == 3);
}

TEST_CASE("validate_workload fills the stream memory default") {
  auto v = validate_workload(spec("s", Payload::stream(), AppClass::of(AppKind::StreamAggregate)), {});
  REQUIRE(v);
  CHECK(v->est_mem_mb() == 71);
  CHECK(v->est_cpu_pct() == doctest::Approx(0.29));
}

TEST_CASE("validate_workload keeps explicit estimates and falls back for Other") {
  auto s = spec("x", Payload::custom("telemetry"), AppClass::other("probe"));
  auto v = validate_workload(s, {});
  REQUIRE(v);
  CHECK(v->est_mem_mb() == 128);
  s.est_mem_mb = 12;
  CHECK(validate_workload(s, {})->est_mem_mb() == 12);
}

TEST_CASE("validate_workload is idempotent") {
  auto v = validate_workload(spec("s", Payload::stream(), AppClass::of(AppKind::StreamAggregate)), {});
  auto again = validate_workload(v->spec(), {});
  REQUIRE(again);
  CHECK(*again == *v);
}

TEST_CASE("mem_saving_pct") {
  CHECK(std::abs(mem_saving_pct(71, 45).value() - 36.62) <= 0.01);
  CHECK(mem_saving_pct(100, 25).value() == 75.0);
  for (double x : {0.5, 1.0, 71.0, 4096.0}) {
    CHECK(mem_saving_pct(x, x).value() == 0.0);
    CHECK(mem_saving_pct(x, 0).value() == 100.0);
  }
  CHECK(mem_saving_pct(50, 100).value() == -100.0);
  CHECK(mem_saving_pct(0, 1).error().code == Errc::NonPositiveBaseline);
  CHECK(mem_saving_pct(-3, 1).error().code == Errc::NonPositiveBaseline);
}

TEST_CASE("node_utilization") {
  auto empty = node_utilization(worker("w1")).value();
  CHECK(empty.cpu_fraction == 0.0);
  CHECK(empty.mem_fraction == 0.0);
  CHECK(node_utilization(worker("w1", 4096, 4, 2048)).value().mem_fraction == 0.5);
  CHECK(node_utilization(worker("w1", 4096, 4, 0, 400)).value().cpu_fraction == 1.0);
  CHECK(node_utilization(worker("w1", 0)).error().code == Errc::ZeroCapacity);
  CHECK(node_utilization(worker("w1", 4096, 0)).error().code == Errc::ZeroCapacity);
}

TEST_CASE("node_utilization is monotone in allocations") {
  hybridedge::testing::Gen g(3);
  for (int i = 0; i < 500; ++i) {
    auto n = worker("w", g.real(1, 8192), g.integer(1, 8), g.real(0, 4096), g.real(0, 400));
    auto before = node_utilization(n).value();
    n.mem_allocated_mb += g.real(0, 1000);
    n.cpu_allocated_pct += g.real(0, 100);
    auto after = node_utilization(n).value();
    CHECK(after.mem_fraction >= before.mem_fraction);
    CHECK(after.cpu_fraction >= before.cpu_fraction);
    CHECK(after.mem_fraction <= 1.0);
    CHECK(after.cpu_fraction <= 1.0);
  }
}

TEST_CASE("payload and app class text forms round trip") {
  for (const auto& a : builtin_app_classes()) CHECK(parse_app_class(to_string(a)) == a);
  CHECK(parse_app_class("cardetect") == AppClass::of(AppKind::CarDetect));
  CHECK(parse_app_class("Telemetry") == AppClass::other("Telemetry"));
  CHECK(parse_payload("STREAM") == Payload::stream());
  CHECK(parse_payload("lidar") == Payload::custom("lidar"));
  CHECK(parse_runtime_kind("Unikernel") == RuntimeKind::Unikernel);
  CHECK_FALSE(parse_runtime_kind("vm"));
}

TEST_CASE("ResourceProfile and ClusterConfig violations") {
  ResourceProfile p;
  CHECK(p.violations().empty());
  p.mem_mb_mean = -1;
  p.cpu_pct_spread = -2;
  CHECK(p.violations().size() == 2);
  ClusterConfig c;
  CHECK(c.violations().empty());
  c.missed_heartbeats_unhealthy = 1;
  CHECK_FALSE(c.violations().empty());
}

TEST_CASE("from_ms and to_ms") {
  CHECK(from_ms(1.5).count() == 1500);
  CHECK(to_ms(Duration(2500)) == 2.5);
}

TEST_CASE("json codec round trips domain types") {
  WorkloadSpec s = spec("s1", Payload::custom("lidar"), AppClass::other("scan"), 3);
  s.est_mem_mb = 10;
  s.priority = 2;
  s.payload_ref = "/tmp/x";
  CHECK(json(s).get<WorkloadSpec>() == s);

  MetricsRecord m;
  m.instance_id = "i";
  m.workload_id = "w";
  m.node_id = "n";
  m.runtime_class = {RuntimeKind::Unikernel, "osv"};
  m.app_class = AppClass::of(AppKind::StreamAggregate);
  m.cpu_avg_pct = 0.2;
  m.mem_peak_mb = 55;
  m.proc_time_ms = 2.5;
  m.started_at = TimePoint(12);
  m.finished_at = TimePoint(99);
  m.outcome = Outcome::failure("NonZeroExit(1)");
  CHECK(json(m).get<MetricsRecord>() == m);

  PlacementDecision d{"w", {{"w-0", "n1", {RuntimeKind::Container, "docker"}}}, TimePoint(7),
                      PlacementReason::Rebalance};
  CHECK(json(d).get<PlacementDecision>() == d);
}

TEST_CASE("Error message format") {
  CHECK(Error{Errc::NotFound, "x"}.message() == "NotFound: x");
  CHECK(to_string(Errc::EmptySet) == "EmptySet");
}
