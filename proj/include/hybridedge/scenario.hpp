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

// Scenario runner: a whole cluster (manager plus simulated agents) on one
// virtual clock. Every message still goes through the wire encoding, so a
// run exercises the same code paths as a networked cluster, and a seed
// fully determines its logs.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hybridedge/manager.hpp"
#include "hybridedge/metrics.hpp"
#include "hybridedge/model.hpp"

namespace hybridedge {

struct ScenarioNode {
  std::string id;
  double mem_capacity_mb = 4096;
  int cpu_cores = 4;
  int slots = 4;
  double join_at_ms = 0;
};

struct TraceEntry {
  double at_ms = 0;
  WorkloadSpec spec;
  std::optional<RuntimeClass> runtime;  // pin instead of classifying
  std::optional<ResourceProfile> profile;
};

enum class FaultKind { DropHeartbeats, KillAgent };

struct Fault {
  FaultKind kind = FaultKind::DropHeartbeats;
  std::string node;
  double from_ms = 0;
  /// End of the drop window, or when a killed agent comes back. Unset: never.
  std::optional<double> to_ms;
};

struct ScenarioAction {
  double at_ms = 0;
  std::string type;  // "rebalance"
};

struct ScenarioAssertion {
  std::string type;
  nlohmann::json args;
};

struct Scenario {
  std::string name;
  std::string description;
  std::uint64_t seed = 1;
  double run_until_ms = 10000;
  double link_latency_ms = 1;
  nlohmann::json cluster;      // ClusterConfig overrides
  nlohmann::json calibration;  // calibration document merged over the defaults
  std::vector<ScenarioNode> nodes;
  std::vector<TraceEntry> trace;
  std::vector<Fault> faults;
  std::vector<ScenarioAction> actions;
  std::map<std::string, std::string> groups;  // label -> metrics filter
  std::vector<ScenarioAssertion> assertions;
};

Expected<Scenario> parse_scenario(std::string_view document);

/// Names of the shipped scenarios, sorted.
std::vector<std::string> builtin_scenario_names();
Expected<Scenario> builtin_scenario(std::string_view name);

struct AssertionResult {
  std::string type;
  bool passed = false;
  std::string detail;
};

struct ScenarioReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<AssertionResult> assertions;
  std::vector<std::string> submit_errors;
  std::vector<std::string> placement_lines;
  std::vector<std::string> metrics_lines;
  std::vector<MetricsRecord> records;
  std::vector<PlacementDecision> decisions;
  std::map<std::string, Summary> group_summaries;
  std::map<std::string, std::string> final_placement;  // active instance -> node
  std::map<std::string, Health> final_health;
  std::size_t orphans = 0;
  std::size_t migrations = 0;
  std::size_t duplicate_reports = 0;
  std::size_t queue_length = 0;
  nlohmann::json cluster;

  bool passed() const;
  /// Active instances per node, zero for nodes without any.
  std::map<std::string, int> final_counts() const;
  Expected<ComparisonReport> compare_groups(const std::string& a, const std::string& b,
                                            const std::map<std::string, std::string>& groups) const;
  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct ScenarioRunOptions {
  std::optional<std::uint64_t> seed;  // overrides the scenario's
  std::filesystem::path workdir;      // inputs and artifacts; a temp dir when empty
};

Expected<ScenarioReport> run_scenario(const Scenario& scenario, const ScenarioRunOptions& options = {});

/// Deterministic fitness-tracker style CSV used as the stream payload.
std::string synthetic_activity_csv(int users, int days);

}  // namespace hybridedge
