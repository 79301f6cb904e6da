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

#include <map>

#include <doctest.h>

#include "hybridedge/config.hpp"
#include "hybridedge/manager.hpp"
#include "support.hpp"

using namespace hybridedge;
using hybridedge::testing::spec;

namespace {

struct Harness {
  SimLoop loop;
  std::vector<std::pair<std::string, Message>> sent;
  Manager mgr;

  explicit Harness(ManagerOptions opts = {})
      : mgr(std::move(opts), loop, [this](const std::string& node, const Message& m) { sent.emplace_back(node, m); }) {}

  void join(const std::string& id, double mem = 4096, int cores = 4, std::vector<std::string> running = {}) {
    mgr.on_message(id, RegisterMsg{id, mem, cores, std::move(running)});
  }

  std::vector<LaunchRequest> launches() const {
    std::vector<LaunchRequest> out;
    for (const auto& [node, m] : sent)
      if (const auto* l = std::get_if<LaunchMsg>(&m)) out.push_back(l->request);
    return out;
  }

  MetricsRecord done(const std::string& instance_id, bool success = true) const {
    const auto& inst = mgr.instances().at(instance_id);
    MetricsRecord r;
    r.instance_id = instance_id;
    r.workload_id = inst.workload_id;
    r.node_id = inst.node_id;
    r.runtime_class = mgr.workloads().at(inst.workload_id).runtime_class;
    r.app_class = mgr.workloads().at(inst.workload_id).spec.spec().app_class;
    r.mem_peak_mb = 10;
    r.outcome = success ? Outcome::ok() : Outcome::failure("NonZeroExit(1)");
    return r;
  }
};

WorkloadSpec image(const std::string& id, int instances = 1) {
  return spec(id, Payload::image(), AppClass::of(AppKind::CarDetect), instances);
}

WorkloadSpec sized(const std::string& id, double mem) {
  auto s = image(id);
  s.est_mem_mb = mem;
  s.est_cpu_pct = 1;
  return s;
}

}  // namespace

TEST_CASE("submit routes a stream workload to unikraft") {
  Harness h;
  for (auto id : {"w1", "w2", "w3", "w4"}) h.join(id);
  auto out = h.mgr.submit(spec("s", Payload::stream(), AppClass::of(AppKind::StreamAggregate)));
  REQUIRE(out);
  const auto& d = std::get<PlacementDecision>(*out);
  REQUIRE(d.assignments.size() == 1);
  CHECK(d.assignments[0].runtime_class == RuntimeClass{RuntimeKind::Unikernel, "unikraft"});
  CHECK(h.launches().size() == 1);
  CHECK(h.mgr.instances().at("s-0").status == InstanceStatus::Dispatched);
}

TEST_CASE("submit spreads 16 images over four workers") {
  Harness h;
  for (auto id : {"w1", "w2", "w3", "w4"}) h.join(id);
  auto d = std::get<PlacementDecision>(h.mgr.submit(image("cv", 16)).value());
  std::map<std::string, int> per;
  for (const auto& a : d.assignments) {
    ++per[a.node_id];
    CHECK(a.runtime_class.kind == RuntimeKind::Container);
  }
  CHECK(per == std::map<std::string, int>{{"w1", 4}, {"w2", 4}, {"w3", 4}, {"w4", 4}});
}

TEST_CASE("submit without workers queues") {
  Harness h;
  auto out = h.mgr.submit(image("a"));
  REQUIRE(out);
  const auto& q = std::get<Queued>(*out);
  CHECK(q.position == 1);
  CHECK(q.reason == "InsufficientCapacity");
  CHECK(h.mgr.queue_length() == 1);
  CHECK(h.mgr.instances().at("a-0").status == InstanceStatus::Queued);
  // Joining a worker drains the queue.
  h.join("w1");
  CHECK(h.mgr.queue_length() == 0);
  CHECK(h.mgr.instances().at("a-0").status == InstanceStatus::Dispatched);
  CHECK(h.mgr.placement_log().back().reason == PlacementReason::DequeuedFromAdmissionQueue);
}

TEST_CASE("submit reports validation failures and duplicates") {
  Harness h;
  h.join("w1");
  auto bad = h.mgr.submit(spec("", Payload::image(), AppClass::of(AppKind::CarDetect), 0));
  REQUIRE_FALSE(bad);
  CHECK(bad.error().code == Errc::ValidationFailed);
  CHECK(bad.error().detail == "EmptyId: id; ZeroInstances: instances");

  REQUIRE(h.mgr.submit(image("a")));
  CHECK(h.mgr.submit(image("a")).error().code == Errc::DuplicateWorkloadId);

  SubmitOptions pin;
  pin.runtime_class = RuntimeClass{RuntimeKind::Container, "unikraft"};
  CHECK(h.mgr.submit(image("b"), pin).error().code == Errc::UnknownFlavor);
}

TEST_CASE("a finished workload id may be resubmitted with a fresh attempt") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(image("a")));
  h.mgr.record(h.done("a-0"), 0);
  REQUIRE(h.mgr.submit(image("a")));
  CHECK(h.launches().back().attempt == 1);
  CHECK(h.launches().back().seed != h.launches().front().seed);
}

TEST_CASE("queued positions follow priority then FIFO") {
  Harness h;
  auto low = image("low");
  auto high = image("high");
  high.priority = 5;
  CHECK(std::get<Queued>(h.mgr.submit(low).value()).position == 1);
  CHECK(std::get<Queued>(h.mgr.submit(image("low2")).value()).position == 2);
  CHECK(std::get<Queued>(h.mgr.submit(high).value()).position == 1);
  h.join("w1", 4096, 4);
  // All fit; dispatch order is high, low, low2.
  const auto l = h.launches();
  REQUIRE(l.size() == 3);
  CHECK(l[0].workload_id == "high");
  CHECK(l[1].workload_id == "low");
  CHECK(l[2].workload_id == "low2");
}

TEST_CASE("record stores once and ignores duplicates") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(image("a")));
  const auto r = h.done("a-0");
  CHECK(h.mgr.record(r, 0));
  CHECK_FALSE(h.mgr.record(r, 0));
  CHECK(h.mgr.metrics().entries().size() == 1);
  CHECK(h.mgr.metrics().duplicates() == 1);
  CHECK(h.mgr.instances().at("a-0").status == InstanceStatus::Completed);
  CHECK(h.mgr.node("w1")->mem_allocated_mb == 0);
}

TEST_CASE("record failure marks the instance Failed") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(image("a")));
  h.mgr.record(h.done("a-0", false), 0);
  CHECK(h.mgr.instances().at("a-0").status == InstanceStatus::Failed);
}

TEST_CASE("freed capacity admits a queued spec in the same turn") {
  Harness h;
  h.join("w1", 4096, 4);
  REQUIRE(std::holds_alternative<PlacementDecision>(h.mgr.submit(sized("a", 1000)).value()));
  REQUIRE(std::holds_alternative<PlacementDecision>(h.mgr.submit(sized("c", 2500)).value()));
  REQUIRE(std::holds_alternative<Queued>(h.mgr.submit(sized("b", 900)).value()));
  h.mgr.record(h.done("a-0"), 0);
  CHECK(h.mgr.queue_length() == 0);
  CHECK(h.mgr.instances().at("b-0").status == InstanceStatus::Dispatched);
  CHECK(h.mgr.node("w1")->mem_allocated_mb == 3400);
}

TEST_CASE("MetricsReport messages are acknowledged by ref") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(image("a")));
  auto replies = h.mgr.on_message("w1", MetricsReportMsg{h.done("a-0"), 0});
  REQUIRE(replies.size() == 1);
  CHECK(std::get<AckMsg>(replies[0]).ref == "a-0#0");
  // A resend is still acknowledged, but stored once.
  h.mgr.on_message("w1", MetricsReportMsg{h.done("a-0"), 0});
  CHECK(h.mgr.metrics().entries().size() == 1);
}

TEST_CASE("Ack marks Running and Busy requeues") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(image("a", 2)));
  // Bare ids and other nodes' or attempts' replies are ignored.
  h.mgr.on_message("w1", AckMsg{"a-0"});
  h.mgr.on_message("w1", AckMsg{"a-0#3"});
  h.mgr.on_message("w2", AckMsg{"a-0#0"});
  CHECK(h.mgr.instances().at("a-0").status == InstanceStatus::Dispatched);
  h.mgr.on_message("w1", AckMsg{"a-0#0"});
  CHECK(h.mgr.instances().at("a-0").status == InstanceStatus::Running);
  h.mgr.on_message("w1", ErrorMsg{"a-1#1", "Busy", "4/4"});
  CHECK(h.mgr.instances().at("a-1").status == InstanceStatus::Dispatched);
  h.mgr.on_message("w1", ErrorMsg{"a-1#0", "Busy", "4/4"});
  CHECK(h.mgr.instances().at("a-1").status == InstanceStatus::Queued);
  CHECK(h.mgr.node("w1")->running_instances == std::set<std::string>{"a-0"});
  // The next retry places it again with a new attempt.
  h.mgr.retry_queue();
  CHECK(h.mgr.instances().at("a-1").status == InstanceStatus::Dispatched);
  CHECK(h.mgr.instances().at("a-1").attempt == 1);
}

TEST_CASE("unexpected messages and unknown nodes are rejected") {
  Harness h;
  auto r = h.mgr.on_message("ghost", HeartbeatMsg{HeartbeatSnapshot{"ghost", 0, 0, {}, {}}});
  CHECK(std::get<ErrorMsg>(r.at(0)).code == "NotFound");
  h.join("w1");
  CHECK(std::get<ErrorMsg>(h.mgr.on_message("w1", TerminateMsg{"x"}).at(0)).code == "UnexpectedMessage");
  CHECK(std::get<ErrorMsg>(h.mgr.on_message("w1", LaunchMsg{}).at(0)).code == "UnexpectedMessage");
}

TEST_CASE("heartbeat snapshot wins but in-flight reservations stay") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(sized("a", 500)));
  REQUIRE(h.mgr.submit(sized("b", 300)));
  h.mgr.on_message("w1", AckMsg{"a-0#0"});
  // The agent only knows about a-0 so far.
  h.mgr.on_message("w1", HeartbeatMsg{HeartbeatSnapshot{"w1", 500, 1, {"a-0"}, from_ms(1)}});
  CHECK(h.mgr.node("w1")->mem_allocated_mb == 800);
  CHECK(h.mgr.node("w1")->running_instances == std::set<std::string>{"a-0", "b-0"});
}

TEST_CASE("heartbeat drops leftovers and requeues acknowledged instances it lost") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(sized("a", 500)));
  h.mgr.on_message("w1", AckMsg{"a-0#0"});
  auto replies =
      h.mgr.on_message("w1", HeartbeatMsg{HeartbeatSnapshot{"w1", 900, 1, {"gone"}, from_ms(1)}});
  REQUIRE(replies.size() == 1);
  CHECK(std::get<TerminateMsg>(replies[0]).instance_id == "gone");
  const auto& a = h.mgr.instances().at("a-0");
  CHECK(a.status == InstanceStatus::Dispatched);
  CHECK(a.attempt == 1);
  CHECK(h.mgr.node("w1")->mem_allocated_mb == 500);
  CHECK(h.mgr.orphans_emitted() == 1);
  CHECK(h.mgr.placement_log().back().reason == PlacementReason::RequeueAfterFailure);
}

TEST_CASE("sweep orphans a silent node and requeues exactly once") {
  Harness h;
  h.join("w1");
  h.join("w2");
  REQUIRE(h.mgr.submit(image("a", 2)));
  h.loop.run_until(from_ms(2500));
  h.mgr.on_message("w1", HeartbeatMsg{HeartbeatSnapshot{"w1", 0, 0, {}, from_ms(2500)}});
  h.loop.run_until(from_ms(3000));
  auto orphans = h.mgr.sweep();
  CHECK(orphans == std::vector<std::string>{"a-1"});
  CHECK(h.mgr.node("w2")->health == Health::Unhealthy);
  CHECK(h.mgr.instances().at("a-1").node_id == "w1");
  CHECK(h.mgr.instances().at("a-1").attempt == 1);
  CHECK(h.mgr.placement_log().back().reason == PlacementReason::RequeueAfterFailure);
  CHECK(h.mgr.sweep().empty());
  CHECK(h.mgr.orphans_emitted() == 1);
}

TEST_CASE("re-register reconciles unknown and lost instances") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(image("a", 2)));
  h.sent.clear();
  auto replies = h.mgr.on_message("w1", RegisterMsg{"w1", 4096, 4, {"a-0", "stray"}});
  bool terminated_stray = false;
  for (const auto& m : replies)
    if (const auto* t = std::get_if<TerminateMsg>(&m)) terminated_stray = t->instance_id == "stray";
  CHECK(terminated_stray);
  CHECK(h.mgr.instances().at("a-0").status == InstanceStatus::Running);
  // a-1 was lost by the agent and is launched again.
  CHECK(h.mgr.instances().at("a-1").attempt == 1);
  CHECK(h.mgr.orphans_emitted() == 1);
}

TEST_CASE("rebalance_now terminates and relaunches") {
  Harness h;
  h.join("w1", 8192, 8);
  REQUIRE(h.mgr.submit(image("a", 4)));
  h.join("w2");
  h.sent.clear();
  auto moves = h.mgr.rebalance_now();
  REQUIRE(moves.size() == 2);
  CHECK(moves[0] == Migration{"a-0", "w1", "w2"});
  int terminates = 0;
  for (const auto& [node, m] : h.sent)
    if (std::holds_alternative<TerminateMsg>(m)) {
      ++terminates;
      CHECK(node == "w1");
    }
  CHECK(terminates == 2);
  CHECK(h.launches().size() == 2);
  CHECK(h.launches()[0].attempt == 1);
  CHECK(h.mgr.migrations() == 2);
  CHECK(h.mgr.active_placement().at("a-0") == "w2");
  // The old attempt's late report does not credit anything.
  CHECK(h.mgr.record(h.done("a-0"), 0));
  CHECK(h.mgr.instances().at("a-0").status == InstanceStatus::Dispatched);
}

TEST_CASE("views expose workloads and nodes") {
  Harness h;
  h.join("w1");
  REQUIRE(h.mgr.submit(image("a", 2)));
  auto w = h.mgr.workload_view("a");
  CHECK(w["workload_id"] == "a");
  CHECK(w["instances"].size() == 2);
  CHECK(w["status_counts"]["Dispatched"] == 2);
  CHECK(h.mgr.workload_view("zzz").is_null());
  auto c = h.mgr.cluster_view();
  CHECK(c["nodes"].size() == 1);
  CHECK(c["active_instances"] == 2);
  CHECK(c["nodes"][0]["mem_fraction"].get<double>() == doctest::Approx(186.0 / 4096));
}

TEST_CASE("placement sink and metrics file receive lines") {
  hybridedge::testing::TempDir dir;
  std::vector<std::string> lines;
  ManagerOptions opts;
  opts.placement_sink = [&](const std::string& l) { lines.push_back(l); };
  opts.metrics_file = dir / "m.jsonl";
  Harness h(opts);
  h.join("w1");
  REQUIRE(h.mgr.submit(image("a")));
  h.mgr.record(h.done("a-0"), 0);
  CHECK(lines.size() == 1);
  auto text = read_text_file(dir / "m.jsonl");
  REQUIRE(text);
  auto replayed = MetricsLog::replay(*text);
  REQUIRE(replayed);
  CHECK(replayed->records() == h.mgr.metrics().records());
}
