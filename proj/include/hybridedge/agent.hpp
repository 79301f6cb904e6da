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

// The per-node agent. handle_message is a pure transition function; the
// AgentRuntime executes its commands on an event loop, and run_agent wires the
// runtime to a TCP connection with reconnect backoff.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <variant>
#include <vector>

#include "hybridedge/backends.hpp"
#include "hybridedge/event_loop.hpp"
#include "hybridedge/protocol.hpp"

namespace hybridedge {

struct BackoffPolicy {
  double initial_ms = 500;
  double multiplier = 2;
  double cap_ms = 8000;
};

/// 500, 1000, 2000, ... capped, with the defaults.
class Backoff {
 public:
  explicit Backoff(BackoffPolicy policy = {}) : policy_(policy), next_ms_(policy.initial_ms) {}
  double next();
  void reset() { next_ms_ = policy_.initial_ms; }

 private:
  BackoffPolicy policy_;
  double next_ms_;
};

enum class BackendKind { Simulated, Process };

struct AgentConfig {
  std::string node_id;
  std::string manager_host = "127.0.0.1";
  int manager_port = 8471;
  double mem_capacity_mb = 4096;
  int cpu_cores = 4;
  int max_concurrent_slots = 4;
  BackendKind backend = BackendKind::Simulated;
  std::string command_template;        // process backend
  std::string calibration_file;        // simulated backend; empty = defaults
  std::filesystem::path artifact_dir = "artifacts";
  double time_scale = 1.0;             // simulated backend on a real clock
  double heartbeat_interval_ms = 1000;
  BackoffPolicy backoff;

  std::vector<std::string> violations() const;
};

struct AgentState {
  std::string node_id;
  int max_slots = 4;
  std::map<std::string, LaunchRequest> running;

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

struct StartExecution {
  LaunchRequest request;
  friend bool operator==(const StartExecution&, const StartExecution&) = default;
};
struct CancelExecution {
  std::string instance_id;
  friend bool operator==(const CancelExecution&, const CancelExecution&) = default;
};
struct CloseConnection {
  friend bool operator==(const CloseConnection&, const CloseConnection&) = default;
};
using AgentCommand = std::variant<StartExecution, CancelExecution, CloseConnection>;

struct AgentTransition {
  AgentState state;
  std::vector<Message> outbound;
  std::vector<AgentCommand> commands;
};

/// Launch with a free slot -> Ack + StartExecution; with none -> Error(Busy).
/// Terminate of a running instance -> Ack + CancelExecution; otherwise
/// Error(NotFound). Ack/Error from the manager are absorbed; message types
/// that only flow agent -> manager are answered with Error(UnexpectedMessage).
AgentTransition handle_message(AgentState state, const Message& msg);

/// Error reply for an undecodable line; a version mismatch also closes.
AgentTransition handle_decode_failure(AgentState state, const DecodeFailure& failure);

/// A finished execution frees its slot and yields one MetricsReport. Results
/// for instances no longer running (terminated meanwhile) yield nothing.
AgentTransition handle_completion(AgentState state, const ExecutionResult& result);

HeartbeatSnapshot make_snapshot(const AgentState& state, TimePoint now);
RegisterMsg make_register(const AgentState& state, const AgentConfig& config);

/// Ref naming one attempt of an instance: "<instance_id>#<attempt>". Launch
/// replies and MetricsReport acknowledgements use it, so a late reply for an
/// earlier attempt can be told apart.
std::string attempt_ref(const std::string& instance_id, int attempt);
std::string metrics_ref(const std::string& instance_id, int attempt);

struct AttemptRef {
  std::string instance_id;
  int attempt = 0;
};
/// nullopt for a bare instance id (Terminate replies) or a malformed ref.
std::optional<AttemptRef> parse_attempt_ref(std::string_view ref);

/// Executes agent transitions on a loop. All methods must be called on the
/// loop's thread.
class AgentRuntime {
 public:
  using Sender = std::function<void(const std::string& line)>;

  AgentRuntime(EventLoop& loop, AgentConfig config, std::unique_ptr<Backend> backend);
  ~AgentRuntime();

  /// (Re)connects: sends Register listing still-running instances, resends
  /// unacknowledged metrics, and starts heartbeating.
  void connect(Sender send);
  /// Stops heartbeating; executions keep running and their metrics wait for
  /// the next connect.
  void disconnect();
  /// Stops everything: heartbeats, executions, and delivery.
  void shutdown();

  void on_line(const std::string& line);

  const AgentState& state() const { return state_; }
  bool connected() const { return static_cast<bool>(send_); }
  bool close_requested() const { return close_requested_; }
  std::size_t unacked_reports() const { return unacked_.size(); }

 private:
  void apply(AgentTransition t);
  void send(const Message& msg);
  void schedule_heartbeat(std::uint64_t generation);

  EventLoop& loop_;
  AgentConfig config_;
  std::unique_ptr<Backend> backend_;
  AgentState state_;
  Sender send_;
  std::uint64_t generation_ = 0;
  bool stopped_ = false;
  bool close_requested_ = false;
  std::map<std::string, MetricsReportMsg> unacked_;
  std::shared_ptr<bool> alive_ = std::make_shared<bool>(true);
};

/// Builds the backend named by the config on `loop`.
Expected<std::unique_ptr<Backend>> make_backend(const AgentConfig& config, EventLoop& loop);

/// Connects to the manager and serves until `stop` is requested. Returns
/// InvalidConfig immediately for a bad config; otherwise only returns on stop.
Expected<Ok> run_agent(const AgentConfig& config, std::stop_token stop);

}  // namespace hybridedge
