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

// A randomized cluster for property tests: a real Manager on a SimLoop, and
// agents driven by the real transition functions with explicit inboxes and
// outboxes, so deliveries interleave arbitrarily with time and faults.

#pragma once

#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hybridedge/agent.hpp"
#include "hybridedge/manager.hpp"
#include "support.hpp"

namespace hybridedge::testing {

class ClusterDriver {
 public:
  struct Agent {
    AgentState state;
    double mem = 4096;
    int cores = 4;
    bool silent = false;  // heartbeats dropped
    std::deque<Message> inbox;
    std::deque<Message> outbox;
  };

  struct Stats {
    std::size_t steps = 0, submitted = 0, completed = 0, busy = 0, restarts = 0, duplicates_sent = 0;
  };

  explicit ClusterDriver(std::uint64_t seed)
      : gen_(seed),
        mgr_(options(seed), loop_, [this](const std::string& node, const Message& m) {
          if (auto it = agents_.find(node); it != agents_.end()) it->second.inbox.push_back(m);
        }) {
    mgr_.start();
  }

  const Manager& manager() const { return mgr_; }
  const std::map<std::string, Agent>& agents() const { return agents_; }
  const Stats& stats() const { return stats_; }
  /// The most recent operations, for failure messages.
  std::string recent_ops(std::size_t n = 12) const {
    std::string out;
    for (std::size_t i = ops_.size() > n ? ops_.size() - n : 0; i < ops_.size(); ++i) out += ops_[i] + "\n";
    return out;
  }

  void step() {
    ++stats_.steps;
    const int op = gen_.integer(0, 99);
    ops_.push_back(fmt::format("step {} op {} t={}ms", stats_.steps, op, to_ms(loop_.now())));
    if (op < 4 || agents_.empty()) return join();
    if (op < 18) return submit();
    if (op < 40) return process(pick_agent());
    if (op < 62) return deliver(pick_agent());
    if (op < 74) return complete(pick_agent());
    if (op < 82) return heartbeat_all();
    if (op < 84) return toggle_silent(pick_agent());
    if (op < 92) return advance();
    if (op < 95) return (void)mgr_.rebalance_now();
    if (op < 97) return restart(pick_agent());
    return resend_report();
  }

  /// Every violated invariant, empty when all hold.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    std::map<std::string, double> mem_by_node, cpu_by_node;
    std::map<std::string, int> holders;
    for (const auto& [id, n] : nodes())
      for (const auto& iid : n.running_instances) ++holders[iid];

    for (const auto& iid : submitted_) {
      auto it = mgr_.instances().find(iid);
      if (it == mgr_.instances().end()) {
        out.push_back(fmt::format("{} vanished", iid));
        continue;
      }
      const auto& inst = it->second;
      const bool active = inst.status == InstanceStatus::Dispatched || inst.status == InstanceStatus::Running;
      if (inst.status == InstanceStatus::Queued && !inst.node_id.empty())
        out.push_back(fmt::format("{} queued but on {}", iid, inst.node_id));
      if (active) {
        const auto* n = mgr_.node(inst.node_id);
        if (n == nullptr) {
          out.push_back(fmt::format("{} on unknown node '{}'", iid, inst.node_id));
          continue;
        }
        if (!n->running_instances.contains(iid)) out.push_back(fmt::format("{} missing from {}", iid, inst.node_id));
        mem_by_node[inst.node_id] += inst.footprint.mem_mb;
        cpu_by_node[inst.node_id] += inst.footprint.cpu_pct;
      }
      const int expected_holders = active ? 1 : 0;
      if (holders[iid] != expected_holders)
        out.push_back(fmt::format("{} ({}) held by {} nodes", iid, to_string(inst.status), holders[iid]));
    }
    for (const auto& [id, n] : nodes()) {
      const double mem = mem_by_node[id];
      if (std::abs(n.mem_allocated_mb - mem) > 1e-6)
        out.push_back(fmt::format("{} ledger {} MB, instances {} MB", id, n.mem_allocated_mb, mem));
      if (std::abs(n.cpu_allocated_pct - cpu_by_node[id]) > 1e-6)
        out.push_back(fmt::format("{} ledger {} %, instances {} %", id, n.cpu_allocated_pct, cpu_by_node[id]));
      if (mem > n.mem_capacity_mb + 1e-6) out.push_back(fmt::format("{} over capacity: {} MB", id, mem));
    }
    return out;
  }

  /// Worst memory overshoot over all nodes, computed from the instances
  /// themselves rather than the manager's ledger.
  double max_overcommit_mb() const {
    std::map<std::string, double> mem;
    for (const auto& [iid, inst] : mgr_.instances())
      if (inst.status == InstanceStatus::Dispatched || inst.status == InstanceStatus::Running)
        mem[inst.node_id] += inst.footprint.mem_mb;
    double worst = -1e300;
    for (const auto& [id, n] : nodes()) worst = std::max(worst, mem[id] - n.mem_capacity_mb);
    return worst;
  }

 private:
  static ManagerOptions options(std::uint64_t seed) {
    ManagerOptions o;
    o.config.rng_seed = seed;
    return o;
  }

  std::map<std::string, NodeState> nodes() const {
    std::map<std::string, NodeState> out;
    for (auto& n : mgr_.nodes()) out.emplace(n.node_id, n);
    return out;
  }

  std::string pick_agent() {
    auto it = agents_.begin();
    std::advance(it, gen_.integer(0, static_cast<int>(agents_.size()) - 1));
    return it->first;
  }

  void to_manager(const std::string& node, const Message& m) {
    ops_.push_back(fmt::format("  {} -> manager: {}", node, encode(m)));
    for (auto& reply : mgr_.on_message(node, m)) agents_.at(node).inbox.push_back(std::move(reply));
  }

  void join() {
    if (agents_.size() >= 6) return;
    const std::string id = fmt::format("n{}", agents_.size() + 1);
    Agent a;
    a.state.node_id = id;
    a.state.max_slots = gen_.integer(2, 8);
    a.mem = gen_.integer(512, 8192);
    a.cores = gen_.integer(1, 8);
    agents_.emplace(id, a);
    to_manager(id, RegisterMsg{id, a.mem, a.cores, {}});
  }

  void submit() {
    static const std::vector<Payload> payloads{Payload::image(), Payload::stream(), Payload::custom("lidar")};
    WorkloadSpec s = spec(fmt::format("wl{}", next_workload_++), gen_.pick(payloads),
                          gen_.pick(builtin_app_classes()), gen_.integer(1, 4));
    s.est_mem_mb = gen_.integer(10, 3000);
    s.est_cpu_pct = gen_.integer(1, 150);
    s.priority = gen_.integer(0, 3);
    if (mgr_.submit(s)) {
      ++stats_.submitted;
      for (const auto& id : instance_ids_for(s.id, s.instances)) submitted_.insert(id);
    }
  }

  void process(const std::string& node) {
    auto& a = agents_.at(node);
    while (!a.inbox.empty()) {
      auto msg = std::move(a.inbox.front());
      a.inbox.pop_front();
      ops_.push_back(fmt::format("  manager -> {}: {}", node, encode(msg)));
      auto t = handle_message(std::move(a.state), msg);
      a.state = std::move(t.state);
      for (auto& m : t.outbound) {
        if (const auto* e = std::get_if<ErrorMsg>(&m); e && e->code == "Busy") ++stats_.busy;
        a.outbox.push_back(std::move(m));
      }
    }
  }

  void deliver(const std::string& node) {
    auto& a = agents_.at(node);
    while (!a.outbox.empty()) {
      auto msg = std::move(a.outbox.front());
      a.outbox.pop_front();
      if (std::holds_alternative<HeartbeatMsg>(msg) && a.silent) continue;
      if (const auto* r = std::get_if<MetricsReportMsg>(&msg)) reports_.push_back({node, *r});
      to_manager(node, msg);
    }
  }

  void complete(const std::string& node) {
    auto& a = agents_.at(node);
    if (a.state.running.empty()) return;
    auto it = a.state.running.begin();
    std::advance(it, gen_.integer(0, static_cast<int>(a.state.running.size()) - 1));
    ExecutionResult r;
    r.metrics.instance_id = it->first;
    r.metrics.workload_id = it->second.workload_id;
    r.metrics.node_id = node;
    r.metrics.runtime_class = it->second.runtime_class;
    r.metrics.app_class = it->second.app_class;
    r.metrics.mem_peak_mb = gen_.real(1, 100);
    r.metrics.outcome = gen_.chance(0.85) ? Outcome::ok() : Outcome::failure("NonZeroExit(1)");
    auto t = handle_completion(std::move(a.state), r);
    a.state = std::move(t.state);
    for (auto& m : t.outbound) a.outbox.push_back(std::move(m));
    ++stats_.completed;
  }

  void heartbeat_all() {
    for (auto& [id, a] : agents_) a.outbox.push_back(HeartbeatMsg{make_snapshot(a.state, loop_.now())});
  }

  void toggle_silent(const std::string& node) { agents_.at(node).silent = !agents_.at(node).silent; }

  void advance() { loop_.run_until(loop_.now() + from_ms(gen_.integer(0, 1500))); }

  void restart(const std::string& node) {
    auto& a = agents_.at(node);
    a.state.running.clear();
    a.inbox.clear();
    a.outbox.clear();
    a.silent = false;
    ++stats_.restarts;
    to_manager(node, RegisterMsg{node, a.mem, a.cores, {}});
  }

  void resend_report() {
    if (reports_.empty()) return;
    const auto& [node, r] = reports_[static_cast<std::size_t>(gen_.integer(0, static_cast<int>(reports_.size()) - 1))];
    ++stats_.duplicates_sent;
    to_manager(node, r);
  }

  Gen gen_;
  SimLoop loop_;
  std::map<std::string, Agent> agents_;
  Manager mgr_;
  std::set<std::string> submitted_;
  std::vector<std::pair<std::string, MetricsReportMsg>> reports_;
  int next_workload_ = 0;
  Stats stats_;
  std::vector<std::string> ops_;
};

}  // namespace hybridedge::testing
