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

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <doctest.h>

#include "hybridedge/config.hpp"
#include "hybridedge/event_loop.hpp"
#include "support.hpp"

using namespace hybridedge;
using hybridedge::testing::TempDir;

TEST_CASE("SimLoop runs tasks in time then post order") {
  SimLoop loop;
  std::vector<int> order;
  loop.post_at(from_ms(5), [&] { order.push_back(3); });
  loop.post([&] { order.push_back(1); });
  loop.post_at(from_ms(5), [&] { order.push_back(4); });
  loop.post([&] {
    order.push_back(2);
    loop.post_after(from_ms(1), [&] { order.push_back(5); });
  });
  loop.run_until(from_ms(4));
  CHECK(order == std::vector<int>{1, 2, 5});
  CHECK(loop.now() == from_ms(4));
  loop.run_until(from_ms(10));
  CHECK(order == std::vector<int>{1, 2, 5, 3, 4});
  CHECK(loop.idle());
  CHECK(loop.tasks_run() == 5);
}

TEST_CASE("RealLoop call runs on the loop thread") {
  RealLoop loop;
  const auto caller = std::this_thread::get_id();
  auto id = loop.call([] { return std::this_thread::get_id(); });
  CHECK(id != caller);
  std::atomic<int> hits{0};
  loop.post_after(from_ms(5), [&] { ++hits; });
  loop.call([] {});
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  CHECK(hits == 1);
  CHECK_THROWS_AS(loop.call([]() -> int { throw std::runtime_error("x"); }), std::runtime_error);
  loop.stop();
  loop.stop();
}

TEST_CASE("parse_app_config reads every section") {
  TempDir dir;
  std::ofstream(dir / "cal.json") << R"({"profiles":{"osv":{"StreamAggregate":{"mem_mb_mean":60,"proc_time_ms_mean":2}}}})";
  const std::string doc = R"({
    "cluster": {"heartbeat_interval_ms": 250, "rebalance_threshold": 2, "rng_seed": 9},
    "calibration": "cal.json",
    "rules": [{"payload_kind":"Stream","kind":"Unikernel","flavor":"osv"},{"kind":"Container","flavor":"podman"}],
    "manager": {"host":"127.0.0.1","agent_port":9001,"http_port":9002,"metrics_log":"m.jsonl"},
    "agent": {"node_id":"e1","max_concurrent_slots":2,"backend":"process","command_template":"true",
              "backoff":{"initial_ms":100,"multiplier":3,"cap_ms":900}}
  })";
  auto c = parse_app_config(doc, dir.path());
  REQUIRE(c);
  CHECK(c->cluster.heartbeat_interval_ms == 250);
  CHECK(c->cluster.rebalance_threshold == 2);
  CHECK(c->cluster.rng_seed == 9);
  CHECK(c->registry.find("osv", AppClass::of(AppKind::StreamAggregate))->profile.mem_mb_mean == 60);
  CHECK(c->rules.rules().front().target.flavor == "osv");
  CHECK(c->manager.agent_port == 9001);
  CHECK(c->manager.metrics_log == dir / "m.jsonl");
  CHECK(c->agent.node_id == "e1");
  CHECK(c->agent.backend == BackendKind::Process);
  CHECK(c->agent.backoff.multiplier == 3);
}

TEST_CASE("parse_app_config errors") {
  CHECK(parse_app_config("{").error().code == Errc::ParseError);
  CHECK(parse_app_config(R"({"cluster":{"missed_heartbeats_suspect":0}})").error().code == Errc::InvalidConfig);
  CHECK(parse_app_config(R"({"rules":[{"kind":"Container","flavor":"xyz"}]})").error().code == Errc::UnknownFlavor);
  auto defaults = parse_app_config("{}");
  REQUIRE(defaults);
  CHECK(defaults->manager.http_port == 8470);
}

TEST_CASE("resolve_app_config prefers the flag over the environment") {
  TempDir dir;
  std::ofstream(dir / "env.json") << R"({"cluster":{"rng_seed":1}})";
  std::ofstream(dir / "flag.json") << R"({"cluster":{"rng_seed":2}})";
  ::setenv(kConfigEnvVar, (dir / "env.json").c_str(), 1);
  CHECK(resolve_app_config(std::nullopt)->cluster.rng_seed == 1);
  CHECK(resolve_app_config((dir / "flag.json").string())->cluster.rng_seed == 2);
  ::unsetenv(kConfigEnvVar);
  CHECK(resolve_app_config(std::nullopt)->cluster.rng_seed == 0);
  CHECK_FALSE(resolve_app_config((dir / "missing.json").string()));
}
