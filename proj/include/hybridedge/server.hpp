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

// The networked manager: a Manager on a RealLoop, a TCP listener for agents
// and the HTTP API.
//
//   POST /v1/workloads            submit; 202 placed or queued
//   GET  /v1/workloads[/{id}]     workload status
//   GET  /v1/nodes                cluster view
//   GET  /v1/metrics?filter=...   summary plus records
//   GET  /v1/reports/compare?a=...&b=...
//   GET  /v1/placements           placement log
//   POST /v1/rebalance
//   GET  /v1/healthz

#pragma once

#include <memory>

#include "hybridedge/config.hpp"
#include "hybridedge/expected.hpp"

namespace hybridedge {

class ManagerServer {
 public:
  explicit ManagerServer(AppConfig config);
  ~ManagerServer();
  ManagerServer(const ManagerServer&) = delete;
  ManagerServer& operator=(const ManagerServer&) = delete;

  /// Binds both ports (0 picks ephemeral ones) and starts serving.
  Expected<Ok> start();
  void stop();

  int agent_port() const;
  int http_port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace hybridedge
