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

// Resource awareness: heartbeat ingestion and heartbeat-gap failure detection.

#pragma once

#include <set>
#include <string>
#include <vector>

#include "hybridedge/model.hpp"

namespace hybridedge {

struct HeartbeatSnapshot {
  std::string node_id;
  double mem_allocated_mb = 0;
  double cpu_allocated_pct = 0;
  std::set<std::string> running_instances;
  TimePoint sent_at{0};

  friend bool operator==(const HeartbeatSnapshot&, const HeartbeatSnapshot&) = default;
};

/// Replaces the node's allocation figures with the agent's self-report and
/// marks it Healthy. A snapshot sent before the last applied one is rejected
/// with StaleSnapshot. Mismatched node ids are reported as NotFound.
Expected<NodeState> apply_heartbeat(const NodeState& state, const HeartbeatSnapshot& snap,
                                    TimePoint now);

/// Health as a pure function of the heartbeat gap.
Health health_for_gap(Duration gap, const ClusterConfig& config);

struct SweepResult {
  std::vector<NodeState> nodes;
  /// Instances of nodes that just became Unhealthy, in (node, instance) order.
  std::vector<std::string> orphans;
};

/// Recomputes every worker's health. A node entering Unhealthy gives up its
/// running instances (returned once as orphans) and its allocations. Manager
/// role nodes are left alone: they do not heartbeat.
SweepResult sweep_health(std::vector<NodeState> nodes, TimePoint now, const ClusterConfig& config);

}  // namespace hybridedge
