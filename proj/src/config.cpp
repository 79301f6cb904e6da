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

#include "hybridedge/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "hybridedge/json_codec.hpp"

namespace hybridedge {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

Expected<Ok> read_agent(const json& j, const fs::path& base, AgentConfig& a) {
  a.node_id = j.value("node_id", a.node_id);
  a.manager_host = j.value("manager_host", a.manager_host);
  a.manager_port = j.value("manager_port", a.manager_port);
  a.mem_capacity_mb = j.value("mem_capacity_mb", a.mem_capacity_mb);
  a.cpu_cores = j.value("cpu_cores", a.cpu_cores);
  a.max_concurrent_slots = j.value("max_concurrent_slots", a.max_concurrent_slots);
  a.command_template = j.value("command_template", a.command_template);
  a.time_scale = j.value("time_scale", a.time_scale);
  a.heartbeat_interval_ms = j.value("heartbeat_interval_ms", a.heartbeat_interval_ms);
  if (auto it = j.find("calibration_file"); it != j.end())
    a.calibration_file = resolve(base, it->get<std::string>()).string();
  if (auto it = j.find("artifact_dir"); it != j.end())
    a.artifact_dir = resolve(base, it->get<std::string>());
  if (auto it = j.find("backend"); it != j.end()) {
    const auto b = it->get<std::string>();
    if (b == "simulated") {
      a.backend = BackendKind::Simulated;
    } else if (b == "process") {
      a.backend = BackendKind::Process;
    } else {
      return fail(Errc::InvalidConfig, "agent.backend must be simulated or process");
    }
  }
  if (auto it = j.find("backoff"); it != j.end()) {
    a.backoff.initial_ms = it->value("initial_ms", a.backoff.initial_ms);
    a.backoff.multiplier = it->value("multiplier", a.backoff.multiplier);
    a.backoff.cap_ms = it->value("cap_ms", a.backoff.cap_ms);
  }
  return Ok{};
}

}  // namespace

Expected<std::string> read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return fail(Errc::IoError, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Expected<AppConfig> parse_app_config(std::string_view document, const fs::path& base_dir) {
  AppConfig cfg;
  try {
    const auto doc = json::parse(document);
    if (!doc.is_object()) return fail(Errc::InvalidConfig, "config must be a JSON object");

    if (auto it = doc.find("cluster"); it != doc.end()) it->get_to(cfg.cluster);
    if (auto v = cfg.cluster.violations(); !v.empty())
      return fail(Errc::InvalidConfig, "cluster: " + v.front());

    if (auto it = doc.find("calibration"); it != doc.end()) {
      std::string text;
      if (it->is_string()) {
        auto loaded = read_text_file(resolve(base_dir, it->get<std::string>()));
        if (!loaded) return unexpected(loaded.error());
        text = std::move(*loaded);
      } else {
        text = it->dump();
      }
      auto reg = CalibrationRegistry::from_json(text, cfg.registry);
      if (!reg) return unexpected(reg.error());
      cfg.registry = std::move(*reg);
    }

    if (auto it = doc.find("rules"); it != doc.end()) {
      auto rules = rules_from_json(*it, cfg.registry);
      if (!rules) return unexpected(rules.error());
      cfg.rules = std::move(*rules);
    }

    if (auto it = doc.find("manager"); it != doc.end()) {
      auto& m = cfg.manager;
      m.host = it->value("host", m.host);
      m.agent_port = it->value("agent_port", m.agent_port);
      m.http_port = it->value("http_port", m.http_port);
      if (auto p = it->find("metrics_log"); p != it->end())
        m.metrics_log = resolve(base_dir, p->get<std::string>());
      if (auto p = it->find("placement_log"); p != it->end())
        m.placement_log = resolve(base_dir, p->get<std::string>());
    }

    if (auto it = doc.find("agent"); it != doc.end()) {
      if (auto r = read_agent(*it, base_dir, cfg.agent); !r) return unexpected(r.error());
    }
  } catch (const json::exception& e) {
    return fail(Errc::ParseError, e.what());
  }
  return cfg;
}

Expected<AppConfig> load_app_config_file(const fs::path& path) {
  auto text = read_text_file(path);
  if (!text) return unexpected(text.error());
  auto cfg = parse_app_config(*text, path.parent_path());
  if (!cfg) return fail(cfg.error().code, fmt::format("{}: {}", path.string(), cfg.error().detail));
  cfg->source = path;
  return cfg;
}

Expected<AppConfig> resolve_app_config(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return load_app_config_file(*flag);
  if (const char* env = std::getenv(kConfigEnvVar); env && *env) return load_app_config_file(env);
  return AppConfig{};
}

}  // namespace hybridedge
