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

// Execution backends. The simulated backend draws metrics from calibrated
// profiles; the process backend runs a real command per launch.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "hybridedge/calibration.hpp"
#include "hybridedge/event_loop.hpp"
#include "hybridedge/kernels.hpp"
#include "hybridedge/model.hpp"

namespace hybridedge {

struct LaunchRequest {
  std::string instance_id;
  std::string workload_id;
  RuntimeClass runtime_class;
  AppClass app_class;
  std::string payload_ref;
  std::optional<ResourceProfile> profile_override;
  std::uint64_t seed = 0;
  // Relaunches of the same instance (failover, migration) bump the attempt.
  int attempt = 0;
  // The manager's reservation; agents echo the sum back in heartbeats.
  double reserved_mem_mb = 0;
  double reserved_cpu_pct = 0;

  friend bool operator==(const LaunchRequest&, const LaunchRequest&) = default;
};

struct ExecutionResult {
  MetricsRecord metrics;
  std::vector<Artifact> artifacts;
};

/// Where an execution runs and where its kernels write.
struct ExecutionContext {
  std::string node_id;
  std::filesystem::path artifact_dir;
};

/// Launch seed for one (instance, attempt) under a cluster seed.
std::uint64_t derive_seed(std::uint64_t cluster_seed, std::string_view instance_id, int attempt);

/// Runs the workload kernel for the request's app_class: detection classes
/// tag the image, StreamAggregate writes the aggregate CSV, other classes
/// produce nothing.
Expected<std::vector<Artifact>> run_kernel(const LaunchRequest& req, const ExecutionContext& ctx);

/// Each metric is mean + u x spread with u uniform in [-1, 1) from a generator
/// seeded by req.seed (draw order: cpu, mem, time), clamped at 0. The run
/// starts at `start` and finishes boot_ms + proc_time_ms later.
Expected<ExecutionResult> simulate_execution(const LaunchRequest& req,
                                             const CalibrationRegistry& registry, TimePoint start,
                                             const ExecutionContext& ctx);

struct ProcessOptions {
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
};

/// Expands {instance_id} {workload_id} {payload} {flavor} {kind} {app_class}
/// {attempt} in the template and splits it into argv (double quotes group).
std::vector<std::string> expand_command(const std::string& command_template, const LaunchRequest& req);

/// Spawns the expanded command without a shell. SpawnFailure when it cannot
/// start; otherwise a result whose outcome is Success iff the exit code is 0
/// ("NonZeroExit(<code>)" / "Timeout(<ms>)" / "Cancelled" on failure).
Expected<ExecutionResult> process_execution(const LaunchRequest& req,
                                            const std::string& command_template,
                                            const ExecutionContext& ctx,
                                            const ProcessOptions& options = {},
                                            std::stop_token stop = {});

/// What an agent drives. start() and cancel() are called on the agent's
/// loop; `done` is always invoked on that loop, never for a cancelled launch.
class Backend {
 public:
  using Done = std::function<void(ExecutionResult)>;
  virtual ~Backend() = default;
  virtual void start(const LaunchRequest& req, Done done) = 0;
  virtual void cancel(const std::string& instance_id) = 0;
};

class SimulatedBackend final : public Backend {
 public:
  /// Simulated durations are divided by `time_scale` before waiting on the
  /// loop (1 on a virtual clock).
  SimulatedBackend(EventLoop& loop, std::shared_ptr<const CalibrationRegistry> registry,
                   ExecutionContext ctx, double time_scale = 1.0);

  void start(const LaunchRequest& req, Done done) override;
  void cancel(const std::string& instance_id) override;

 private:
  EventLoop& loop_;
  std::shared_ptr<const CalibrationRegistry> registry_;
  ExecutionContext ctx_;
  double time_scale_;
  std::uint64_t next_token_ = 0;
  std::map<std::string, std::uint64_t> active_;
};

class ProcessBackend final : public Backend {
 public:
  ProcessBackend(EventLoop& loop, std::string command_template, ExecutionContext ctx,
                 ProcessOptions options = {});
  ~ProcessBackend() override;

  void start(const LaunchRequest& req, Done done) override;
  void cancel(const std::string& instance_id) override;

 private:
  EventLoop& loop_;
  std::string template_;
  ExecutionContext ctx_;
  ProcessOptions options_;
  std::mutex mu_;
  std::map<std::string, std::jthread> running_;
  std::vector<std::jthread> finished_;
};

}  // namespace hybridedge
