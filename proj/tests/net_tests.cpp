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


// End to end over real sockets: a manager on ephemeral ports, one simulated
// agent, and the HTTP API.

#include <doctest.h>
#include <httplib.h>

#include <chrono>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "hybridedge/agent.hpp"
#include "hybridedge/server.hpp"
#include "support.hpp"

using namespace hybridedge;
using nlohmann::json;

namespace {

// Polls until pred holds or the deadline passes.
template <class Pred>
bool eventually(Pred pred, std::chrono::milliseconds limit = std::chrono::seconds(10)) {
  const auto deadline = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < deadline) {
    if (pred()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  return pred();
}

json get_json(httplib::Client& c, const std::string& path) {
  auto res = c.Get(path);
  REQUIRE(res);
  REQUIRE(res->status == 200);
  return json::parse(res->body);
}

}  // namespace

TEST_CASE("manager and agent over TCP with the HTTP API") {
  testing::TempDir dir;
  AppConfig cfg;
  cfg.manager.host = "127.0.0.1";
  cfg.manager.agent_port = 0;
  cfg.manager.http_port = 0;
  cfg.cluster.heartbeat_interval_ms = 100;
  ManagerServer server(cfg);
  REQUIRE(server.start());
  REQUIRE(server.agent_port() > 0);
  REQUIRE(server.http_port() > 0);

  AgentConfig agent;
  agent.node_id = "edge-1";
  agent.manager_port = server.agent_port();
  agent.artifact_dir = dir.path();
  agent.heartbeat_interval_ms = 100;
  std::jthread agent_thread([agent](std::stop_token st) { (void)run_agent(agent, st); });

  httplib::Client http("127.0.0.1", server.http_port());
  http.set_read_timeout(5, 0);
  CHECK(get_json(http, "/v1/healthz")["ok"] == true);
  REQUIRE(eventually([&] { return get_json(http, "/v1/nodes")["nodes"].size() == 1; }));

  // Object detection runs for over a second, long enough to collide with it.
  const auto image = dir / "street.jpg";
  std::ofstream(image) << "not really a jpeg";
  const json spec = {{"id", "objects"},     {"payload_kind", "Image"},        {"app_class", "ObjectDetect"},
                     {"instances", 2},      {"payload_ref", image.string()}};
  auto submitted = http.Post("/v1/workloads", spec.dump(), "application/json");
  REQUIRE(submitted);
  CHECK(submitted->status == 202);
  CHECK(json::parse(submitted->body)["status"] == "placed");

  auto duplicate = http.Post("/v1/workloads", spec.dump(), "application/json");
  REQUIRE(duplicate);
  CHECK(duplicate->status == 409);
  CHECK(json::parse(duplicate->body)["error"]["code"] == "DuplicateWorkloadId");

  auto bad = http.Post("/v1/workloads", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status >= 400);

  REQUIRE(eventually([&] { return get_json(http, "/v1/metrics")["records"].size() == 2; }));
  const auto view = get_json(http, "/v1/workloads/objects");
  CHECK(view["status_counts"]["Completed"] == 2);
  CHECK(view["runtime_class"]["kind"] == "Container");
  CHECK(get_json(http, "/v1/workloads").size() == 1);
  CHECK(get_json(http, "/v1/placements").size() == 1);

  auto missing = http.Get("/v1/workloads/nope");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  const auto metrics = get_json(http, "/v1/metrics?filter=workload_id%3Dobjects");
  CHECK(metrics["records"].size() == 2);
  for (const auto& r : metrics["records"]) CHECK(r["node_id"] == "edge-1");

  auto unknown_filter = http.Get("/v1/metrics?filter=colour%3Dred");
  REQUIRE(unknown_filter);
  CHECK(unknown_filter->status >= 400);

  auto empty_compare = http.Get("/v1/reports/compare?a=workload_id%3Dobjects&b=workload_id%3Dnone");
  REQUIRE(empty_compare);
  CHECK(empty_compare->status == 422);
  CHECK(get_json(http, "/v1/reports/compare?a=workload_id%3Dobjects&b=workload_id%3Dobjects").is_object());

  // Once every instance has finished, the id may be submitted again; the new
  // runs get fresh attempts, so their reports are not mistaken for resends.
  auto again = http.Post("/v1/workloads", spec.dump(), "application/json");
  REQUIRE(again);
  CHECK(again->status == 202);
  REQUIRE(eventually([&] { return get_json(http, "/v1/metrics")["records"].size() == 4; }));
  CHECK(get_json(http, "/v1/workloads/objects")["instances"][0]["attempt"] == 1);

  auto rebalance = http.Post("/v1/rebalance", "", "application/json");
  REQUIRE(rebalance);
  CHECK(rebalance->status == 200);
  CHECK(json::parse(rebalance->body)["migrations"].empty());

  agent_thread.request_stop();
  agent_thread.join();
  server.stop();
}
