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

// Placement, admission, spreading and count-based rebalancing. Every function
// here is pure: node lists come in by value or const reference and the
// hypothetical post-decision state is returned to the caller.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "hybridedge/model.hpp"

namespace hybridedge {

struct Footprint {
  double mem_mb = 0;
  double cpu_pct = 0;
};

struct InstanceRequest {
  std::string instance_id;
  Footprint footprint;
};

struct AdmitResult {
  bool admitted = false;
  std::string queued_reason;  // "InsufficientCapacity" when not admitted

  static AdmitResult admit() { return {true, {}}; }
  static AdmitResult queued(std::string reason) { return {false, std::move(reason)}; }
};

struct Migration {
  std::string instance_id;
  std::string from_node;
  std::string to_node;

  friend bool operator==(const Migration&, const Migration&) = default;
};

/// Healthy, and a Worker (or a Manager when the config allows it).
bool is_schedulable(const NodeState& node, const ClusterConfig& config);
bool fits(const NodeState& node, const Footprint& fp);

/// weight_mem x free_mem_fraction + weight_cpu x free_cpu_fraction.
double placement_score(const NodeState& node, const ClusterConfig& config);

/// "<workload_id>-<k>" for k in [0, instances).
std::vector<std::string> instance_ids_for(const std::string& workload_id, int instances);

/// Admit iff every instance, placed one at a time against hypothetical
/// allocations, finds a schedulable node with room. Never mutates.
AdmitResult admit(const ValidatedSpec& spec, const std::vector<NodeState>& nodes,
                  const ClusterConfig& config = {});

struct Placement {
  PlacementDecision decision;
  std::vector<NodeState> nodes;  // with every assignment debited
};

/// Greedy best-residual placement: each instance goes to the fitting node with
/// the highest score (ties to the smallest node_id), and that node is debited
/// before the next instance is considered. NoCapacity if any instance does
/// not fit.
Expected<Placement> place_instances(const std::string& workload_id,
                                    const std::vector<InstanceRequest>& instances,
                                    const RuntimeClass& rc, std::vector<NodeState> nodes,
                                    const ClusterConfig& config, TimePoint now,
                                    PlacementReason reason = PlacementReason::Fresh);

Expected<PlacementDecision> place(const ValidatedSpec& spec, const RuntimeClass& rc,
                                  const std::vector<NodeState>& nodes, const ClusterConfig& config,
                                  TimePoint now = TimePoint{0});

/// Moves instances (smallest id first) from the most- to the least-loaded
/// schedulable node, by instance count, until max - min <= threshold. Ties
/// pick the smallest node_id. When `footprints` is given, a move whose target
/// lacks room is skipped, and the loop stops when no move fits.
std::vector<Migration> rebalance(const std::vector<NodeState>& nodes, const ClusterConfig& config,
                                 const std::map<std::string, Footprint>* footprints = nullptr);

struct Orphan {
  std::string instance_id;
  std::string workload_id;
  RuntimeClass runtime_class;
  Footprint footprint;
};

struct RequeueResult {
  std::vector<PlacementDecision> decisions;
  std::vector<NodeState> nodes;
  std::vector<Orphan> unplaced;  // back to the admission queue
};

/// Re-places each orphan individually (reason RequeueAfterFailure), debiting
/// as it goes. Orphans that fit nowhere come back in `unplaced`.
RequeueResult requeue_orphans(const std::vector<Orphan>& orphans, std::vector<NodeState> nodes,
                              const ClusterConfig& config, TimePoint now);

}  // namespace hybridedge
