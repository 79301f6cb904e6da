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

#include "hybridedge/scheduler.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace hybridedge {

namespace {

// Index of the best fitting node, or -1.
int pick_node(const std::vector<NodeState>& nodes, const Footprint& fp, const ClusterConfig& config) {
  int best = -1;
  double best_score = 0;
  for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
    const auto& n = nodes[i];
    if (!is_schedulable(n, config) || !fits(n, fp)) continue;
    const double score = placement_score(n, config);
    if (best < 0 || score > best_score ||
        (score == best_score && n.node_id < nodes[best].node_id)) {
      best = i;
      best_score = score;
    }
  }
  return best;
}

void debit(NodeState& node, const std::string& instance_id, const Footprint& fp) {
  node.mem_allocated_mb += fp.mem_mb;
  node.cpu_allocated_pct += fp.cpu_pct;
  node.running_instances.insert(instance_id);
}

void credit(NodeState& node, const std::string& instance_id, const Footprint& fp) {
  node.mem_allocated_mb = std::max(0.0, node.mem_allocated_mb - fp.mem_mb);
  node.cpu_allocated_pct = std::max(0.0, node.cpu_allocated_pct - fp.cpu_pct);
  node.running_instances.erase(instance_id);
}

std::vector<InstanceRequest> requests_for(const ValidatedSpec& spec) {
  std::vector<InstanceRequest> out;
  for (auto& id : instance_ids_for(spec.id(), spec.instances()))
    out.push_back({std::move(id), {spec.est_mem_mb(), spec.est_cpu_pct()}});
  return out;
}

}  // namespace

bool is_schedulable(const NodeState& node, const ClusterConfig& config) {
  if (node.health != Health::Healthy) return false;
  return node.role == NodeRole::Worker || config.manager_schedulable;
}

bool fits(const NodeState& node, const Footprint& fp) {
  return node.free_mem_mb() >= fp.mem_mb && node.free_cpu_pct() >= fp.cpu_pct;
}

double placement_score(const NodeState& node, const ClusterConfig& config) {
  const double free_mem = node.mem_capacity_mb > 0 ? node.free_mem_mb() / node.mem_capacity_mb : 0;
  const double cpu_cap = node.cpu_capacity_pct();
  const double free_cpu = cpu_cap > 0 ? node.free_cpu_pct() / cpu_cap : 0;
  return config.weight_mem * free_mem + config.weight_cpu * free_cpu;
}

std::vector<std::string> instance_ids_for(const std::string& workload_id, int instances) {
  std::vector<std::string> ids;
  ids.reserve(std::max(instances, 0));
  for (int k = 0; k < instances; ++k) ids.push_back(fmt::format("{}-{}", workload_id, k));
  return ids;
}

AdmitResult admit(const ValidatedSpec& spec, const std::vector<NodeState>& nodes,
                  const ClusterConfig& config) {
  auto trial = place_instances(spec.id(), requests_for(spec), RuntimeClass{}, nodes, config, TimePoint{0});
  return trial ? AdmitResult::admit() : AdmitResult::queued("InsufficientCapacity");
}

Expected<Placement> place_instances(const std::string& workload_id,
                                    const std::vector<InstanceRequest>& instances,
                                    const RuntimeClass& rc, std::vector<NodeState> nodes,
                                    const ClusterConfig& config, TimePoint now,
                                    PlacementReason reason) {
  Placement out;
  out.decision.workload_id = workload_id;
  out.decision.decided_at = now;
  out.decision.reason = reason;
  for (const auto& inst : instances) {
    const int idx = pick_node(nodes, inst.footprint, config);
    if (idx < 0)
      return fail(Errc::NoCapacity, fmt::format("no schedulable node fits {} ({} MB, {} %CPU)",
                                                inst.instance_id, inst.footprint.mem_mb,
                                                inst.footprint.cpu_pct));
    debit(nodes[idx], inst.instance_id, inst.footprint);
    out.decision.assignments.push_back({inst.instance_id, nodes[idx].node_id, rc});
  }
  out.nodes = std::move(nodes);
  return out;
}

Expected<PlacementDecision> place(const ValidatedSpec& spec, const RuntimeClass& rc,
                                  const std::vector<NodeState>& nodes, const ClusterConfig& config,
                                  TimePoint now) {
  auto placed = place_instances(spec.id(), requests_for(spec), rc, nodes, config, now);
  if (!placed) return unexpected(placed.error());
  return std::move(placed->decision);
}

std::vector<Migration> rebalance(const std::vector<NodeState>& nodes, const ClusterConfig& config,
                                 const std::map<std::string, Footprint>* footprints) {
  std::vector<NodeState> pool;
  for (const auto& n : nodes)
    if (is_schedulable(n, config)) pool.push_back(n);
  std::sort(pool.begin(), pool.end(),
            [](const NodeState& a, const NodeState& b) { return a.node_id < b.node_id; });

  std::vector<Migration> out;
  if (pool.size() < 2) return out;
  std::size_t total = 0;
  for (const auto& n : pool) total += n.running_instances.size();

  auto footprint_of = [&](const std::string& id) -> Footprint {
    if (!footprints) return {};
    auto it = footprints->find(id);
    return it == footprints->end() ? Footprint{} : it->second;
  };

  while (out.size() < total) {
    // pool is sorted by id, so strict comparisons keep the smallest id on ties.
    std::size_t hi = 0, lo = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      if (pool[i].running_instances.size() > pool[hi].running_instances.size()) hi = i;
      if (pool[i].running_instances.size() < pool[lo].running_instances.size()) lo = i;
    }
    const auto spread = pool[hi].running_instances.size() - pool[lo].running_instances.size();
    if (spread <= static_cast<std::size_t>(config.rebalance_threshold)) break;

    const std::string* chosen = nullptr;
    for (const auto& id : pool[hi].running_instances) {
      if (!footprints || fits(pool[lo], footprint_of(id))) {
        chosen = &id;
        break;
      }
    }
    if (!chosen) break;
    const std::string id = *chosen;
    const Footprint fp = footprint_of(id);
    out.push_back({id, pool[hi].node_id, pool[lo].node_id});
    credit(pool[hi], id, fp);
    debit(pool[lo], id, fp);
  }
  return out;
}

RequeueResult requeue_orphans(const std::vector<Orphan>& orphans, std::vector<NodeState> nodes,
                              const ClusterConfig& config, TimePoint now) {
  RequeueResult result;
  for (const auto& orphan : orphans) {
    auto placed = place_instances(orphan.workload_id, {{orphan.instance_id, orphan.footprint}},
                                  orphan.runtime_class, nodes, config, now,
                                  PlacementReason::RequeueAfterFailure);
    if (!placed) {
      result.unplaced.push_back(orphan);
      continue;
    }
    nodes = std::move(placed->nodes);
    result.decisions.push_back(std::move(placed->decision));
  }
  result.nodes = std::move(nodes);
  return result;
}

}  // namespace hybridedge
