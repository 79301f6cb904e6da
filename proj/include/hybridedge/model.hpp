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

// Shared domain types for the hybrid container/unikernel orchestrator.

#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hybridedge/expected.hpp"

namespace hybridedge {

/// Microseconds since the epoch of whichever clock produced it (virtual or
/// steady). All timestamps and durations in the system use this resolution.
using Duration = std::chrono::microseconds;
using TimePoint = std::chrono::microseconds;

constexpr Duration from_ms(double ms) {
  return Duration(static_cast<std::int64_t>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5)));
}
constexpr double to_ms(Duration d) { return static_cast<double>(d.count()) / 1000.0; }

// ---------------------------------------------------------------------------
// Payload and application classes

enum class PayloadKind { Image, Stream, Custom };

struct Payload {
  PayloadKind kind = PayloadKind::Image;
  std::string custom_name;  // only for Custom

  static Payload image() { return {PayloadKind::Image, {}}; }
  static Payload stream() { return {PayloadKind::Stream, {}}; }
  static Payload custom(std::string name) { return {PayloadKind::Custom, std::move(name)}; }

  friend auto operator<=>(const Payload&, const Payload&) = default;
};

enum class AppKind { FaceDetect, CarDetect, BodyDetect, ObjectDetect, StreamAggregate, Other };

struct AppClass {
  AppKind kind = AppKind::Other;
  std::string other_name;  // only for Other

  static AppClass of(AppKind k) { return {k, {}}; }
  static AppClass other(std::string name) { return {AppKind::Other, std::move(name)}; }

  bool is_detection() const {
    return kind == AppKind::FaceDetect || kind == AppKind::CarDetect ||
           kind == AppKind::BodyDetect || kind == AppKind::ObjectDetect;
  }

  friend auto operator<=>(const AppClass&, const AppClass&) = default;
};

// Text forms: built-in names are matched case-insensitively on parse, and any
// other name becomes Custom(name) / Other(name).
std::string to_string(const Payload& p);
std::string to_string(const AppClass& a);
Payload parse_payload(std::string_view text);
AppClass parse_app_class(std::string_view text);

/// The five named application classes, in declaration order.
const std::vector<AppClass>& builtin_app_classes();

// ---------------------------------------------------------------------------
// Runtime classes and cost profiles

enum class RuntimeKind { Container, Unikernel };

std::string_view to_string(RuntimeKind k);
std::optional<RuntimeKind> parse_runtime_kind(std::string_view text);

struct RuntimeClass {
  RuntimeKind kind = RuntimeKind::Container;
  std::string flavor;

  friend auto operator<=>(const RuntimeClass&, const RuntimeClass&) = default;
};

std::string to_string(const RuntimeClass& rc);

struct ResourceProfile {
  double cpu_pct_mean = 0;
  double cpu_pct_spread = 0;
  double mem_mb_mean = 1;
  double mem_mb_spread = 0;
  double proc_time_ms_mean = 1;
  double proc_time_ms_spread = 0;
  double boot_ms = 0;

  /// Empty when every invariant holds; otherwise one message per violation.
  std::vector<std::string> violations() const;

  friend bool operator==(const ResourceProfile&, const ResourceProfile&) = default;
};

// ---------------------------------------------------------------------------
// Workloads

struct WorkloadSpec {
  std::string id;
  Payload payload;
  std::string payload_ref;
  AppClass app_class;
  std::optional<double> est_mem_mb;
  std::optional<double> est_cpu_pct;
  int instances = 1;
  int priority = 0;

  friend bool operator==(const WorkloadSpec&, const WorkloadSpec&) = default;
};

/// A WorkloadSpec that passed validation, with every estimate filled in.
/// Only validate_workload constructs one.
class ValidatedSpec {
 public:
  const WorkloadSpec& spec() const { return spec_; }
  const std::string& id() const { return spec_.id; }
  double est_mem_mb() const { return *spec_.est_mem_mb; }
  double est_cpu_pct() const { return *spec_.est_cpu_pct; }
  int instances() const { return spec_.instances; }
  int priority() const { return spec_.priority; }

  friend bool operator==(const ValidatedSpec&, const ValidatedSpec&) = default;

 private:
  friend struct ValidatedSpecAccess;
  explicit ValidatedSpec(WorkloadSpec s) : spec_(std::move(s)) {}
  WorkloadSpec spec_;
};

// ---------------------------------------------------------------------------
// Nodes

enum class NodeRole { Manager, Worker };
enum class Health { Healthy, Suspect, Unhealthy };

std::string_view to_string(NodeRole r);
std::string_view to_string(Health h);

struct NodeState {
  std::string node_id;
  NodeRole role = NodeRole::Worker;
  int cpu_cores = 4;
  double mem_capacity_mb = 4096;
  double mem_allocated_mb = 0;
  double cpu_allocated_pct = 0;  // 100 = one full core
  std::set<std::string> running_instances;
  TimePoint last_heartbeat{0};
  std::optional<TimePoint> last_snapshot_sent_at;
  Health health = Health::Healthy;

  double cpu_capacity_pct() const { return 100.0 * cpu_cores; }
  double free_mem_mb() const { return mem_capacity_mb - mem_allocated_mb; }
  double free_cpu_pct() const { return cpu_capacity_pct() - cpu_allocated_pct; }

  friend bool operator==(const NodeState&, const NodeState&) = default;
};

struct Utilization {
  double cpu_fraction = 0;
  double mem_fraction = 0;
};

/// cpu = allocated / (100 x cores), mem = allocated / capacity, both clamped
/// to [0, 1].
Expected<Utilization> node_utilization(const NodeState& node);

// ---------------------------------------------------------------------------
// Placement and metrics

enum class PlacementReason { Fresh, Rebalance, RequeueAfterFailure, DequeuedFromAdmissionQueue };
std::string_view to_string(PlacementReason r);

struct Assignment {
  std::string instance_id;
  std::string node_id;
  RuntimeClass runtime_class;

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

struct PlacementDecision {
  std::string workload_id;
  std::vector<Assignment> assignments;
  TimePoint decided_at{0};
  PlacementReason reason = PlacementReason::Fresh;

  friend bool operator==(const PlacementDecision&, const PlacementDecision&) = default;
};

struct Outcome {
  bool success = true;
  std::string failure_reason;

  static Outcome ok() { return {}; }
  static Outcome failure(std::string reason) { return {false, std::move(reason)}; }

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct MetricsRecord {
  std::string instance_id;
  std::string workload_id;
  std::string node_id;
  RuntimeClass runtime_class;
  AppClass app_class;
  double cpu_avg_pct = 0;
  double mem_peak_mb = 0;
  double proc_time_ms = 0;
  double boot_ms = 0;
  TimePoint started_at{0};
  TimePoint finished_at{0};
  Outcome outcome;

  friend bool operator==(const MetricsRecord&, const MetricsRecord&) = default;
};

// ---------------------------------------------------------------------------
// Configuration

struct ClusterConfig {
  double heartbeat_interval_ms = 1000;
  int missed_heartbeats_suspect = 2;
  int missed_heartbeats_unhealthy = 3;
  int rebalance_threshold = 1;
  double weight_mem = 0.7;
  double weight_cpu = 0.3;
  std::uint64_t rng_seed = 0;
  // Real-time divisor for simulated durations; unset means a fully virtual
  // clock (the scenario harness). Only consulted by real-time agents.
  std::optional<double> time_scale;
  double queue_retry_interval_ms = 1000;
  bool manager_schedulable = false;
  std::map<AppClass, double> default_est_mem_mb = default_mem_estimates();
  std::map<AppClass, double> default_est_cpu_pct = default_cpu_estimates();
  double fallback_est_mem_mb = 128;
  double fallback_est_cpu_pct = 10;

  std::vector<std::string> violations() const;
  double default_mem_for(const AppClass& a) const;
  double default_cpu_for(const AppClass& a) const;

  static std::map<AppClass, double> default_mem_estimates();
  static std::map<AppClass, double> default_cpu_estimates();
};

// ---------------------------------------------------------------------------
// Operations

/// Fills absent estimates from the per-class defaults, or lists every
/// violated invariant (EmptyId, ZeroInstances, NegativeEstimate).
Expected<ValidatedSpec, std::vector<Error>> validate_workload(const WorkloadSpec& spec,
                                                              const ClusterConfig& config);

/// (baseline - alternative) / baseline x 100.
Expected<double> mem_saving_pct(double baseline_mb, double alternative_mb);

}  // namespace hybridedge
