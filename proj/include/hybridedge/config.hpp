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

// The single JSON configuration file shared by the manager, agents and CLI.
//
//   {
//     "cluster":     { ClusterConfig fields },
//     "rules":       [ classification rules ],
//     "calibration": { inline calibration document } | "path/to/file.json",
//     "manager":     { "host", "agent_port", "http_port", "metrics_log", "placement_log" },
//     "agent":       { AgentConfig fields, "backend": "simulated" | "process" }
//   }
//
// Every section is optional. Relative paths resolve against the file's
// directory.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "hybridedge/agent.hpp"
#include "hybridedge/calibration.hpp"
#include "hybridedge/classifier.hpp"
#include "hybridedge/model.hpp"

namespace hybridedge {

inline constexpr const char* kConfigEnvVar = "HYBRIDEDGE_CONFIG";

struct ManagerEndpoint {
  std::string host = "0.0.0.0";
  int agent_port = 8471;
  int http_port = 8470;
  std::optional<std::filesystem::path> metrics_log;
  std::optional<std::filesystem::path> placement_log;
};

struct AppConfig {
  ClusterConfig cluster;
  CalibrationRegistry registry = CalibrationRegistry::defaults();
  RuleTable rules = RuleTable::defaults();
  ManagerEndpoint manager;
  AgentConfig agent;
  std::optional<std::filesystem::path> source;
};

Expected<AppConfig> parse_app_config(std::string_view document,
                                     const std::filesystem::path& base_dir = {});
Expected<AppConfig> load_app_config_file(const std::filesystem::path& path);

/// `--config` wins over HYBRIDEDGE_CONFIG; with neither, built-in defaults.
Expected<AppConfig> resolve_app_config(const std::optional<std::string>& flag);

Expected<std::string> read_text_file(const std::filesystem::path& path);

}  // namespace hybridedge
