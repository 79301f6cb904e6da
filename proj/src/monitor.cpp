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

#include "hybridedge/monitor.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace hybridedge {

Expected<NodeState> apply_heartbeat(const NodeState& state, const HeartbeatSnapshot& snap,
                                    TimePoint now) {
  if (snap.node_id != state.node_id)
    return fail(Errc::NotFound, fmt::format("snapshot for {} applied to {}", snap.node_id, state.node_id));
  if (state.last_snapshot_sent_at && snap.sent_at < *state.last_snapshot_sent_at)
    return fail(Errc::StaleSnapshot,
                fmt::format("{}: sent_at {} < {}", snap.node_id, snap.sent_at.count(),
                            state.last_snapshot_sent_at->count()));
  NodeState next = state;
  next.mem_allocated_mb = std::clamp(snap.mem_allocated_mb, 0.0, state.mem_capacity_mb);
  next.cpu_allocated_pct = std::max(0.0, snap.cpu_allocated_pct);
  next.running_instances = snap.running_instances;
  next.last_heartbeat = now;
  next.last_snapshot_sent_at = snap.sent_at;
  next.health = Health::Healthy;
  return next;
}

Health health_for_gap(Duration gap, const ClusterConfig& config) {
  const Duration interval = from_ms(config.heartbeat_interval_ms);
  if (gap >= interval * config.missed_heartbeats_unhealthy) return Health::Unhealthy;
  if (gap >= interval * config.missed_heartbeats_suspect) return Health::Suspect;
  return Health::Healthy;
}

SweepResult sweep_health(std::vector<NodeState> nodes, TimePoint now, const ClusterConfig& config) {
  SweepResult result;
  for (auto& node : nodes) {
    if (node.role != NodeRole::Worker) continue;
    const Health next = health_for_gap(now - node.last_heartbeat, config);
    if (next == Health::Unhealthy && node.health != Health::Unhealthy) {
      result.orphans.insert(result.orphans.end(), node.running_instances.begin(),
                            node.running_instances.end());
      node.running_instances.clear();
      node.mem_allocated_mb = 0;
      node.cpu_allocated_pct = 0;
    }
    node.health = next;
  }
  result.nodes = std::move(nodes);
  return result;
}

}  // namespace hybridedge
