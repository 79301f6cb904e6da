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
#include <set>

#include <doctest.h>

#include "hybridedge/monitor.hpp"
#include "support.hpp"

using namespace hybridedge;
using hybridedge::testing::worker;

namespace {

HeartbeatSnapshot snap(const std::string& node, double ms, std::set<std::string> running = {}) {
  HeartbeatSnapshot s;
  s.node_id = node;
  s.sent_at = from_ms(ms);
  s.running_instances = std::move(running);
  s.mem_allocated_mb = 100.0 * s.running_instances.size();
  return s;
}

}  // namespace

TEST_CASE("apply_heartbeat recovers an Unhealthy node") {
  auto n = worker("w1");
  n.health = Health::Unhealthy;
  auto out = apply_heartbeat(n, snap("w1", 10), from_ms(11));
  REQUIRE(out);
  CHECK(out->health == Health::Healthy);
  CHECK(out->last_heartbeat == from_ms(11));
  CHECK(out->last_snapshot_sent_at == from_ms(10));
}

TEST_CASE("apply_heartbeat rejects stale snapshots") {
  auto n = apply_heartbeat(worker("w1"), snap("w1", 500), from_ms(500)).value();
  auto stale = apply_heartbeat(n, snap("w1", 400, {"x"}), from_ms(600));
  REQUIRE_FALSE(stale);
  CHECK(stale.error().code == Errc::StaleSnapshot);
  CHECK(n.running_instances.empty());
}

TEST_CASE("apply_heartbeat replaces the running set and allocations") {
  auto out = apply_heartbeat(worker("w1", 4096, 4, 999, 123), snap("w1", 1, {"a", "b", "c"}), from_ms(1)).value();
  CHECK(out.running_instances.size() == 3);
  CHECK(out.mem_allocated_mb == 300);
  CHECK(out.cpu_allocated_pct == 0);
}

TEST_CASE("apply_heartbeat rejects a mismatched node id") {
  CHECK(apply_heartbeat(worker("w1"), snap("w2", 1), from_ms(1)).error().code == Errc::NotFound);
}

TEST_CASE("sweep_health at one interval keeps the node Healthy") {
  auto n = worker("w1");
  n.running_instances = {"a", "b"};
  auto r = sweep_health({n}, from_ms(1000), {});
  CHECK(r.nodes[0].health == Health::Healthy);
  CHECK(r.orphans.empty());
}

TEST_CASE("sweep_health at three intervals orphans the running instances once") {
  auto n = worker("w1", 4096, 4, 200, 50);
  n.running_instances = {"a", "b"};
  auto r = sweep_health({n}, from_ms(3000), {});
  CHECK(r.nodes[0].health == Health::Unhealthy);
  CHECK(r.orphans == std::vector<std::string>{"a", "b"});
  CHECK(r.nodes[0].running_instances.empty());
  CHECK(r.nodes[0].mem_allocated_mb == 0);
  auto again = sweep_health(r.nodes, from_ms(9000), {});
  CHECK(again.orphans.empty());
  CHECK(again.nodes[0].health == Health::Unhealthy);
}

TEST_CASE("sweep_health marks Suspect in between and skips managers") {
  auto n = worker("w1");
  auto m = worker("m");
  m.role = NodeRole::Manager;
  auto r = sweep_health({n, m}, from_ms(2500), {});
  CHECK(r.nodes[0].health == Health::Suspect);
  CHECK(r.nodes[1].health == Health::Healthy);
}

TEST_CASE("health is a pure function of the gap") {
  ClusterConfig c;
  hybridedge::testing::Gen g(5);
  for (int i = 0; i < 1000; ++i) {
    c.heartbeat_interval_ms = g.real(10, 2000);
    c.missed_heartbeats_suspect = g.integer(1, 4);
    c.missed_heartbeats_unhealthy = c.missed_heartbeats_suspect + g.integer(0, 3);
    const double gap = g.real(0, 10 * c.heartbeat_interval_ms);
    Health expected = Health::Healthy;
    if (gap >= c.missed_heartbeats_unhealthy * c.heartbeat_interval_ms) {
      expected = Health::Unhealthy;
    } else if (gap >= c.missed_heartbeats_suspect * c.heartbeat_interval_ms) {
      expected = Health::Suspect;
    }
    // Stay clear of the microsecond rounding at the thresholds.
    const double s = c.missed_heartbeats_suspect * c.heartbeat_interval_ms;
    const double u = c.missed_heartbeats_unhealthy * c.heartbeat_interval_ms;
    if (std::abs(gap - s) < 0.01 || std::abs(gap - u) < 0.01) continue;
    CHECK(health_for_gap(from_ms(gap), c) == expected);
  }
}

TEST_CASE("orphans are emitted at most once across sweep sequences") {
  hybridedge::testing::Gen g(8);
  for (int round = 0; round < 100; ++round) {
    std::vector<NodeState> nodes;
    for (int i = 0; i < g.integer(1, 5); ++i) {
      auto n = worker(fmt::format("w{}", i));
      n.last_heartbeat = from_ms(g.real(0, 3000));
      for (int k = 0; k < g.integer(0, 4); ++k) n.running_instances.insert(fmt::format("w{}-i{}", i, k));
      nodes.push_back(n);
    }
    std::multiset<std::string> seen;
    double now = 0;
    for (int step = 0; step < 10; ++step) {
      now += g.real(0, 2000);
      auto r = sweep_health(nodes, from_ms(now), {});
      seen.insert(r.orphans.begin(), r.orphans.end());
      nodes = r.nodes;
    }
    for (const auto& id : seen) CHECK(seen.count(id) == 1);
  }
}

TEST_CASE("heartbeat then sweep at the same instant never orphans") {
  hybridedge::testing::Gen g(9);
  for (int i = 0; i < 200; ++i) {
    auto n = worker("w1");
    n.health = g.chance(0.5) ? Health::Unhealthy : Health::Suspect;
    const double t = g.real(0, 1e6);
    auto applied = apply_heartbeat(n, snap("w1", t, {"a", "b"}), from_ms(t)).value();
    auto r = sweep_health({applied}, from_ms(t), {});
    CHECK(r.orphans.empty());
    CHECK(r.nodes[0].health == Health::Healthy);
  }
}
