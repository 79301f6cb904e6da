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

#include "hybridedge/manager.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "hybridedge/agent.hpp"
#include "hybridedge/json_codec.hpp"
#include "hybridedge/monitor.hpp"

namespace hybridedge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool active(InstanceStatus s) {
  return s == InstanceStatus::Dispatched || s == InstanceStatus::Running;
}

bool terminal(InstanceStatus s) {
  return s == InstanceStatus::Completed || s == InstanceStatus::Failed;
}

void debit(NodeState& n, const std::string& id, const Footprint& fp) {
  if (!n.running_instances.insert(id).second) return;
  n.mem_allocated_mb += fp.mem_mb;
  n.cpu_allocated_pct += fp.cpu_pct;
}

void clamp_allocations(NodeState& n) {
  n.mem_allocated_mb = std::clamp(n.mem_allocated_mb, 0.0, n.mem_capacity_mb);
  n.cpu_allocated_pct = std::clamp(n.cpu_allocated_pct, 0.0, n.cpu_capacity_pct());
}

}  // namespace

std::string_view to_string(InstanceStatus s) {
  switch (s) {
    case InstanceStatus::Queued: return "Queued";
    case InstanceStatus::Dispatched: return "Dispatched";
    case InstanceStatus::Running: return "Running";
    case InstanceStatus::Completed: return "Completed";
    case InstanceStatus::Failed: return "Failed";
  }
  return "?";
}

Manager::Manager(ManagerOptions options, EventLoop& loop, Dispatcher dispatch)
    : opts_(std::move(options)), loop_(loop), dispatch_(std::move(dispatch)) {
  if (opts_.metrics_file) metrics_ = MetricsLog(*opts_.metrics_file);
}

void Manager::start() {
  stopped_ = false;
  schedule_sweep();
  schedule_retry();
}

void Manager::schedule_sweep() {
  loop_.post_after(from_ms(opts_.config.heartbeat_interval_ms), [this, alive = alive_] {
    if (!*alive || stopped_) return;
    sweep();
    schedule_sweep();
  });
}

void Manager::schedule_retry() {
  loop_.post_after(from_ms(opts_.config.queue_retry_interval_ms), [this, alive = alive_] {
    if (!*alive || stopped_) return;
    retry_queue();
    schedule_retry();
  });
}

std::vector<NodeState> Manager::node_vector() const {
  std::vector<NodeState> out;
  out.reserve(nodes_.size());
  for (const auto& [id, n] : nodes_) out.push_back(n);
  return out;
}

std::vector<NodeState> Manager::nodes() const { return node_vector(); }

const NodeState* Manager::node(const std::string& id) const {
  auto it = nodes_.find(id);
  return it == nodes_.end() ? nullptr : &it->second;
}

std::map<std::string, std::string> Manager::active_placement() const {
  std::map<std::string, std::string> out;
  for (const auto& [id, inst] : instances_)
    if (active(inst.status)) out[id] = inst.node_id;
  return out;
}

Expected<SubmitOutcome> Manager::submit(const WorkloadSpec& spec, const SubmitOptions& opts) {
  auto validated = validate_workload(spec, opts_.config);
  if (!validated) {
    std::string detail;
    for (const auto& e : validated.error()) {
      if (!detail.empty()) detail += "; ";
      detail += e.message();
    }
    return fail(Errc::ValidationFailed, detail);
  }

  if (auto it = workloads_.find(spec.id); it != workloads_.end()) {
    for (const auto& id : it->second.instance_ids)
      if (!terminal(instances_.at(id).status)) return fail(Errc::DuplicateWorkloadId, spec.id);
  }

  RuntimeClass rc;
  if (opts.runtime_class) {
    const auto kind = opts_.registry->flavor_kind(opts.runtime_class->flavor);
    if (!kind || *kind != opts.runtime_class->kind)
      return fail(Errc::UnknownFlavor, to_string(*opts.runtime_class));
    rc = *opts.runtime_class;
  } else {
    rc = classify(*validated, opts_.rules);
  }

  const ValidatedSpec& vs = *validated;
  const Footprint fp{vs.est_mem_mb(), vs.est_cpu_pct()};
  WorkloadInfo info(vs, rc);
  info.profile_override = opts.profile_override;
  info.instance_ids = instance_ids_for(vs.id(), vs.instances());
  info.submitted_at = loop_.now();
  std::vector<InstanceRequest> requests;
  for (const auto& id : info.instance_ids) {
    // A resubmitted id keeps its dispatch count so attempts never repeat.
    auto& inst = instances_[id];
    inst.instance_id = id;
    inst.workload_id = vs.id();
    inst.node_id.clear();
    inst.status = InstanceStatus::Queued;
    inst.footprint = fp;
    requests.push_back({id, fp});
  }
  workloads_.insert_or_assign(vs.id(), std::move(info));

  auto placed = place_instances(vs.id(), requests, rc, node_vector(), opts_.config, loop_.now(),
                                PlacementReason::Fresh);
  if (placed) {
    dispatch(placed->decision);
    return SubmitOutcome{placed->decision};
  }
  enqueue(vs.id(), workloads_.at(vs.id()).instance_ids);
  std::vector<const QueueEntry*> order;
  for (const auto& e : queue_) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(), [](const QueueEntry* a, const QueueEntry* b) {
    return a->priority != b->priority ? a->priority > b->priority : a->seq < b->seq;
  });
  const auto pos = std::find_if(order.begin(), order.end(),
                                [&](const QueueEntry* e) { return e->workload_id == vs.id(); });
  return SubmitOutcome{Queued{static_cast<std::size_t>(pos - order.begin()) + 1, "InsufficientCapacity"}};
}

void Manager::enqueue(const std::string& workload_id, std::vector<std::string> instance_ids) {
  for (const auto& id : instance_ids) {
    auto& inst = instances_.at(id);
    inst.status = InstanceStatus::Queued;
    inst.node_id.clear();
  }
  queue_.push_back({++queue_seq_, workloads_.at(workload_id).spec.priority(), workload_id,
                    std::move(instance_ids)});
}

void Manager::log_decision(const PlacementDecision& d) {
  placement_log_.push_back(d);
  if (opts_.placement_sink) opts_.placement_sink(json(d).dump());
}

void Manager::dispatch(const PlacementDecision& d) {
  log_decision(d);
  for (const auto& a : d.assignments) launch(instances_.at(a.instance_id), a.node_id);
}

void Manager::launch(InstanceInfo& inst, const std::string& node_id) {
  const auto& w = workloads_.at(inst.workload_id);
  inst.attempt = inst.dispatches++;
  inst.node_id = node_id;
  inst.status = InstanceStatus::Dispatched;
  debit(nodes_.at(node_id), inst.instance_id, inst.footprint);

  LaunchRequest req;
  req.instance_id = inst.instance_id;
  req.workload_id = inst.workload_id;
  req.runtime_class = w.runtime_class;
  req.app_class = w.spec.spec().app_class;
  req.payload_ref = w.spec.spec().payload_ref;
  req.profile_override = w.profile_override;
  req.seed = derive_seed(opts_.config.rng_seed, inst.instance_id, inst.attempt);
  req.attempt = inst.attempt;
  req.reserved_mem_mb = inst.footprint.mem_mb;
  req.reserved_cpu_pct = inst.footprint.cpu_pct;
  dispatch_(node_id, LaunchMsg{std::move(req)});
}

void Manager::release(InstanceInfo& inst) {
  auto it = nodes_.find(inst.node_id);
  if (it == nodes_.end()) return;
  NodeState& n = it->second;
  if (n.running_instances.erase(inst.instance_id) == 0) return;
  n.mem_allocated_mb -= inst.footprint.mem_mb;
  n.cpu_allocated_pct -= inst.footprint.cpu_pct;
  clamp_allocations(n);
}

InstanceInfo* Manager::current_attempt(const std::string& node_id, const std::string& ref) {
  auto parsed = parse_attempt_ref(ref);
  if (!parsed) return nullptr;
  auto it = instances_.find(parsed->instance_id);
  if (it == instances_.end() || it->second.node_id != node_id || it->second.attempt != parsed->attempt)
    return nullptr;
  return &it->second;
}

bool Manager::record(const MetricsRecord& record, int attempt) {
  if (!metrics_.append(record, attempt)) return false;
  auto it = instances_.find(record.instance_id);
  if (it != instances_.end() && it->second.attempt == attempt && active(it->second.status)) {
    release(it->second);
    it->second.status = record.outcome.success ? InstanceStatus::Completed : InstanceStatus::Failed;
    retry_queue();
  }
  return true;
}

std::vector<Message> Manager::on_message(const std::string& from_node, const Message& msg) {
  std::vector<Message> out;
  std::visit(overloaded{
                 [&](const RegisterMsg& m) { on_register(from_node, m, out); },
                 [&](const HeartbeatMsg& m) { on_heartbeat(m, out); },
                 [&](const MetricsReportMsg& m) {
                   record(m.record, m.attempt);
                   out.emplace_back(AckMsg{metrics_ref(m.record.instance_id, m.attempt)});
                 },
                 [&](const AckMsg& m) {
                   auto* inst = current_attempt(from_node, m.ref);
                   if (inst && inst->status == InstanceStatus::Dispatched) inst->status = InstanceStatus::Running;
                 },
                 [&](const ErrorMsg& m) {
                   if (m.code != to_string(Errc::Busy)) return;
                   auto* inst = current_attempt(from_node, m.ref);
                   if (!inst || !active(inst->status)) return;
                   release(*inst);
                   enqueue(inst->workload_id, {inst->instance_id});
                 },
                 [&](const auto& other) {
                   out.emplace_back(make_error("", Errc::UnexpectedMessage,
                                               fmt::format("{} is not sent to the manager",
                                                           message_type(Message{other}))));
                 },
             },
             msg);
  return out;
}

void Manager::requeue_lost(const std::vector<std::string>& lost) {
  if (lost.empty()) return;
  orphans_emitted_ += lost.size();
  std::vector<Orphan> orphans;
  for (const auto& iid : lost) {
    auto& inst = instances_.at(iid);
    inst.status = InstanceStatus::Queued;
    inst.node_id.clear();
    orphans.push_back({iid, inst.workload_id, workloads_.at(inst.workload_id).runtime_class, inst.footprint});
  }
  auto res = requeue_orphans(orphans, node_vector(), opts_.config, loop_.now());
  for (const auto& d : res.decisions) dispatch(d);
  for (const auto& o : res.unplaced) enqueue(o.workload_id, {o.instance_id});
}

void Manager::on_register(const std::string& from, const RegisterMsg& m, std::vector<Message>& out) {
  const std::string& id = m.node_id.empty() ? from : m.node_id;
  auto [it, fresh] = nodes_.try_emplace(id);
  NodeState& n = it->second;
  n.node_id = id;
  n.role = NodeRole::Worker;
  n.mem_capacity_mb = m.mem_capacity_mb;
  n.cpu_cores = m.cpu_cores;
  n.health = Health::Healthy;
  n.last_heartbeat = loop_.now();
  // A new connection may come with a new clock.
  n.last_snapshot_sent_at.reset();

  const std::set<std::string> reported(m.running.begin(), m.running.end());
  std::vector<std::string> lost;
  n.running_instances.clear();
  n.mem_allocated_mb = 0;
  n.cpu_allocated_pct = 0;
  std::set<std::string> kept;
  for (auto& [iid, inst] : instances_) {
    if (inst.node_id != id || !active(inst.status)) continue;
    if (reported.contains(iid)) {
      inst.status = InstanceStatus::Running;
      debit(n, iid, inst.footprint);
      kept.insert(iid);
    } else {
      lost.push_back(iid);
    }
  }
  for (const auto& iid : reported)
    if (!kept.contains(iid)) out.emplace_back(TerminateMsg{iid});
  clamp_allocations(n);
  out.emplace_back(AckMsg{id});

  requeue_lost(lost);
  retry_queue();
}

void Manager::on_heartbeat(const HeartbeatMsg& m, std::vector<Message>& out) {
  auto it = nodes_.find(m.snapshot.node_id);
  if (it == nodes_.end()) {
    out.emplace_back(make_error(m.snapshot.node_id, Errc::NotFound, "register first"));
    return;
  }
  NodeState& n = it->second;
  const Health before = n.health;
  auto applied = apply_heartbeat(n, m.snapshot, loop_.now());
  if (!applied) return;  // stale snapshot
  n = std::move(*applied);

  // The snapshot decides what runs, except for launches still in flight to
  // the agent. An acknowledged instance the agent no longer lists ended
  // without a report reaching us. Anything listed that is not ours here is a
  // leftover the manager moved away: stop it. The ledger is rebuilt from our
  // own footprints, since the agent may still be holding leftovers.
  for (const auto& iid : m.snapshot.running_instances) {
    auto inst = instances_.find(iid);
    if (inst == instances_.end() || inst->second.node_id != n.node_id || !active(inst->second.status))
      out.emplace_back(TerminateMsg{iid});
  }
  n.running_instances.clear();
  n.mem_allocated_mb = 0;
  n.cpu_allocated_pct = 0;
  std::vector<std::string> lost;
  for (const auto& [iid, inst] : instances_) {
    if (inst.node_id != n.node_id || !active(inst.status)) continue;
    if (m.snapshot.running_instances.contains(iid) || inst.status == InstanceStatus::Dispatched) {
      debit(n, iid, inst.footprint);
    } else {
      lost.push_back(iid);
    }
  }
  requeue_lost(lost);
  if (before == Health::Unhealthy || !lost.empty()) retry_queue();
}

std::vector<std::string> Manager::sweep() {
  auto res = sweep_health(node_vector(), loop_.now(), opts_.config);
  for (auto& n : res.nodes) nodes_[n.node_id] = std::move(n);

  std::vector<std::string> ids;
  std::vector<Orphan> orphans;
  for (const auto& iid : res.orphans) {
    auto it = instances_.find(iid);
    if (it == instances_.end() || !active(it->second.status)) continue;
    auto& inst = it->second;
    if (nodes_.at(inst.node_id).health != Health::Unhealthy) continue;
    inst.status = InstanceStatus::Queued;
    inst.node_id.clear();
    ids.push_back(iid);
    orphans.push_back({iid, inst.workload_id, workloads_.at(inst.workload_id).runtime_class,
                       inst.footprint});
  }
  if (orphans.empty()) return ids;
  orphans_emitted_ += orphans.size();
  auto placed = requeue_orphans(orphans, node_vector(), opts_.config, loop_.now());
  for (const auto& d : placed.decisions) dispatch(d);
  for (const auto& o : placed.unplaced) enqueue(o.workload_id, {o.instance_id});
  return ids;
}

void Manager::retry_queue() {
  if (queue_.empty()) return;
  std::stable_sort(queue_.begin(), queue_.end(), [](const QueueEntry& a, const QueueEntry& b) {
    return a.priority != b.priority ? a.priority > b.priority : a.seq < b.seq;
  });
  std::vector<QueueEntry> remaining;
  for (auto& entry : queue_) {
    std::vector<InstanceRequest> requests;
    for (const auto& id : entry.instance_ids) {
      const auto& inst = instances_.at(id);
      if (inst.status == InstanceStatus::Queued && inst.workload_id == entry.workload_id)
        requests.push_back({id, inst.footprint});
    }
    if (requests.empty()) continue;
    // Later, smaller entries may still fit where an earlier one does not.
    auto placed = place_instances(entry.workload_id, requests,
                                  workloads_.at(entry.workload_id).runtime_class, node_vector(),
                                  opts_.config, loop_.now(), PlacementReason::DequeuedFromAdmissionQueue);
    if (placed) {
      dispatch(placed->decision);
    } else {
      remaining.push_back(std::move(entry));
    }
  }
  queue_ = std::move(remaining);
}

std::vector<Migration> Manager::rebalance_now() {
  std::map<std::string, Footprint> footprints;
  for (const auto& [id, inst] : instances_)
    if (active(inst.status)) footprints[id] = inst.footprint;
  const auto planned = rebalance(node_vector(), opts_.config, &footprints);

  std::vector<Migration> applied;
  for (const auto& m : planned) {
    auto it = instances_.find(m.instance_id);
    if (it == instances_.end() || !active(it->second.status) || it->second.node_id != m.from_node)
      continue;
    auto& inst = it->second;
    dispatch_(m.from_node, TerminateMsg{inst.instance_id});
    release(inst);
    PlacementDecision d;
    d.workload_id = inst.workload_id;
    d.assignments.push_back({inst.instance_id, m.to_node, workloads_.at(inst.workload_id).runtime_class});
    d.decided_at = loop_.now();
    d.reason = PlacementReason::Rebalance;
    log_decision(d);
    launch(inst, m.to_node);
    ++migrations_;
    applied.push_back(m);
  }
  return applied;
}

json Manager::workload_view(const std::string& workload_id) const {
  auto it = workloads_.find(workload_id);
  if (it == workloads_.end()) return nullptr;
  const auto& w = it->second;
  json instances = json::array();
  std::map<std::string, int> counts;
  for (const auto& id : w.instance_ids) {
    const auto& inst = instances_.at(id);
    ++counts[std::string(to_string(inst.status))];
    instances.push_back({{"instance_id", id},
                         {"node_id", inst.node_id},
                         {"status", to_string(inst.status)},
                         {"attempt", inst.attempt}});
  }
  return {{"workload_id", workload_id},
          {"spec", w.spec.spec()},
          {"runtime_class", w.runtime_class},
          {"submitted_at_us", w.submitted_at.count()},
          {"status_counts", counts},
          {"instances", instances}};
}

json Manager::cluster_view() const {
  json nodes = json::array();
  for (const auto& [id, n] : nodes_) {
    json j = n;
    if (auto u = node_utilization(n)) {
      j["cpu_fraction"] = u->cpu_fraction;
      j["mem_fraction"] = u->mem_fraction;
    }
    nodes.push_back(std::move(j));
  }
  std::size_t active_count = 0;
  for (const auto& [id, inst] : instances_) active_count += active(inst.status) ? 1 : 0;
  return {{"nodes", nodes},
          {"workloads", workloads_.size()},
          {"active_instances", active_count},
          {"queue_length", queue_.size()},
          {"metrics_records", metrics_.entries().size()},
          {"duplicate_reports", metrics_.duplicates()},
          {"orphans_emitted", orphans_emitted_},
          {"migrations", migrations_}};
}

}  // namespace hybridedge
