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

// The manager: owns the cluster ledger, the admission queue, placement,
// failover, rebalancing and the metrics store. Transport-free; every method
// runs on one EventLoop.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hybridedge/calibration.hpp"
#include "hybridedge/classifier.hpp"
#include "hybridedge/event_loop.hpp"
#include "hybridedge/metrics.hpp"
#include "hybridedge/model.hpp"
#include "hybridedge/protocol.hpp"
#include "hybridedge/scheduler.hpp"

namespace hybridedge {

enum class InstanceStatus { Queued, Dispatched, Running, Completed, Failed };
std::string_view to_string(InstanceStatus s);

struct InstanceInfo {
  std::string instance_id;
  std::string workload_id;
  std::string node_id;  // empty while queued
  InstanceStatus status = InstanceStatus::Queued;
  int attempt = 0;      // of the current or last dispatch
  int dispatches = 0;
  Footprint footprint;
};

struct WorkloadInfo {
  ValidatedSpec spec;
  RuntimeClass runtime_class;
  std::optional<ResourceProfile> profile_override;
  std::vector<std::string> instance_ids;
  TimePoint submitted_at{0};

  WorkloadInfo(ValidatedSpec s, RuntimeClass rc) : spec(std::move(s)), runtime_class(std::move(rc)) {}
};

struct Queued {
  std::size_t position = 0;  // 1-based, in dequeue order
  std::string reason;
};

using SubmitOutcome = std::variant<PlacementDecision, Queued>;

struct SubmitOptions {
  /// Skips classification.
  std::optional<RuntimeClass> runtime_class;
  /// Forwarded to agents in every launch of this workload.
  std::optional<ResourceProfile> profile_override;
};

/// Delivers a message to an agent; the manager never waits for delivery.
using Dispatcher = std::function<void(const std::string& node_id, const Message& msg)>;

struct ManagerOptions {
  ClusterConfig config;
  RuleTable rules = RuleTable::defaults();
  std::shared_ptr<const CalibrationRegistry> registry =
      std::make_shared<const CalibrationRegistry>(CalibrationRegistry::defaults());
  /// Every stored placement decision, one JSON line each.
  std::function<void(const std::string&)> placement_sink;
  /// Optional file behind the metrics log.
  std::optional<std::filesystem::path> metrics_file;
};

class Manager {
 public:
  Manager(ManagerOptions options, EventLoop& loop, Dispatcher dispatch);
  Manager(const Manager&) = delete;
  Manager& operator=(const Manager&) = delete;
  ~Manager() { *alive_ = false; }

  /// Starts the periodic health sweep and queue retry timers.
  void start();
  void stop() { stopped_ = true; }

  /// ValidationFailed (detail lists every problem), DuplicateWorkloadId, or
  /// UnknownFlavor for a pinned runtime class.
  Expected<SubmitOutcome> submit(const WorkloadSpec& spec, const SubmitOptions& opts = {});

  /// Handles one message from `from_node`'s connection; returns the replies.
  std::vector<Message> on_message(const std::string& from_node, const Message& msg);

  /// False for a duplicate (instance_id, attempt).
  bool record(const MetricsRecord& record, int attempt);

  /// Marks silent nodes and requeues their orphans. Returns orphan ids.
  std::vector<std::string> sweep();
  /// Places queued workloads that fit now, priority then FIFO.
  void retry_queue();
  std::vector<Migration> rebalance_now();

  const ClusterConfig& config() const { return opts_.config; }
  const CalibrationRegistry& registry() const { return *opts_.registry; }
  std::vector<NodeState> nodes() const;
  const NodeState* node(const std::string& id) const;
  const std::map<std::string, WorkloadInfo>& workloads() const { return workloads_; }
  const std::map<std::string, InstanceInfo>& instances() const { return instances_; }
  std::size_t queue_length() const { return queue_.size(); }
  const std::vector<PlacementDecision>& placement_log() const { return placement_log_; }
  const MetricsLog& metrics() const { return metrics_; }
  std::size_t orphans_emitted() const { return orphans_emitted_; }
  std::size_t migrations() const { return migrations_; }
  /// Node of every instance that is dispatched or running.
  std::map<std::string, std::string> active_placement() const;

  nlohmann::json workload_view(const std::string& workload_id) const;
  nlohmann::json cluster_view() const;

 private:
  struct QueueEntry {
    std::uint64_t seq = 0;
    int priority = 0;
    std::string workload_id;
    std::vector<std::string> instance_ids;
  };

  void on_register(const std::string& from, const RegisterMsg& m, std::vector<Message>& out);
  void on_heartbeat(const HeartbeatMsg& m, std::vector<Message>& out);
  void on_ack(const AckMsg& m);
  void on_error(const ErrorMsg& m);

  void dispatch(const PlacementDecision& d);
  void launch(InstanceInfo& inst, const std::string& node_id);
  void release(InstanceInfo& inst);
  // Instance on from node for the attempt named by an "id#attempt" ref.
  InstanceInfo* current_attempt(const std::string& node_id, const std::string& ref);
  void requeue_lost(const std::vector<std::string>& lost);
  void enqueue(const std::string& workload_id, std::vector<std::string> instance_ids);
  void log_decision(const PlacementDecision& d);
  std::vector<NodeState> node_vector() const;
  void schedule_sweep();
  void schedule_retry();

  ManagerOptions opts_;
  EventLoop& loop_;
  Dispatcher dispatch_;
  bool stopped_ = false;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);

  std::map<std::string, NodeState> nodes_;
  std::map<std::string, WorkloadInfo> workloads_;
  std::map<std::string, InstanceInfo> instances_;
  std::vector<QueueEntry> queue_;
  std::uint64_t queue_seq_ = 0;
  std::vector<PlacementDecision> placement_log_;
  MetricsLog metrics_;
  std::size_t orphans_emitted_ = 0;
  std::size_t migrations_ = 0;
};

}  // namespace hybridedge
