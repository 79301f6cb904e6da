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

#include "hybridedge/json_codec.hpp"

namespace hybridedge {

namespace {

PlacementReason parse_reason(const std::string& s) {
  for (auto r : {PlacementReason::Fresh, PlacementReason::Rebalance,
                 PlacementReason::RequeueAfterFailure,
                 PlacementReason::DequeuedFromAdmissionQueue}) {
    if (to_string(r) == s) return r;
  }
  throw json::other_error::create(501, "unknown placement reason " + s, nullptr);
}

template <typename T>
void get_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) it->get_to(out);
}

}  // namespace

void to_json(json& j, const Payload& p) { j = to_string(p); }
void from_json(const json& j, Payload& p) { p = parse_payload(j.get<std::string>()); }
void to_json(json& j, const AppClass& a) { j = to_string(a); }
void from_json(const json& j, AppClass& a) { a = parse_app_class(j.get<std::string>()); }

void to_json(json& j, const RuntimeClass& rc) {
  j = json{{"kind", to_string(rc.kind)}, {"flavor", rc.flavor}};
}

void from_json(const json& j, RuntimeClass& rc) {
  auto kind = parse_runtime_kind(j.at("kind").get<std::string>());
  if (!kind) throw json::other_error::create(501, "unknown runtime kind", &j);
  rc.kind = *kind;
  rc.flavor = j.at("flavor").get<std::string>();
}

void to_json(json& j, const ResourceProfile& p) {
  j = json{{"cpu_pct_mean", p.cpu_pct_mean},         {"cpu_pct_spread", p.cpu_pct_spread},
           {"mem_mb_mean", p.mem_mb_mean},           {"mem_mb_spread", p.mem_mb_spread},
           {"proc_time_ms_mean", p.proc_time_ms_mean}, {"proc_time_ms_spread", p.proc_time_ms_spread},
           {"boot_ms", p.boot_ms}};
}

void from_json(const json& j, ResourceProfile& p) {
  get_opt(j, "cpu_pct_mean", p.cpu_pct_mean);
  get_opt(j, "cpu_pct_spread", p.cpu_pct_spread);
  get_opt(j, "mem_mb_mean", p.mem_mb_mean);
  get_opt(j, "mem_mb_spread", p.mem_mb_spread);
  get_opt(j, "proc_time_ms_mean", p.proc_time_ms_mean);
  get_opt(j, "proc_time_ms_spread", p.proc_time_ms_spread);
  get_opt(j, "boot_ms", p.boot_ms);
}

void to_json(json& j, const WorkloadSpec& s) {
  j = json{{"id", s.id},
           {"payload_kind", s.payload},
           {"payload_ref", s.payload_ref},
           {"app_class", s.app_class},
           {"instances", s.instances},
           {"priority", s.priority}};
  if (s.est_mem_mb) j["est_mem_mb"] = *s.est_mem_mb;
  if (s.est_cpu_pct) j["est_cpu_pct"] = *s.est_cpu_pct;
}

void from_json(const json& j, WorkloadSpec& s) {
  s.id = j.value("id", std::string{});
  s.payload = parse_payload(j.at("payload_kind").get<std::string>());
  s.payload_ref = j.value("payload_ref", std::string{});
  if (auto it = j.find("app_class"); it != j.end()) {
    it->get_to(s.app_class);
  } else {
    // Without an explicit class, stream payloads are the aggregation task and
    // anything else is an opaque Other(kind).
    s.app_class = s.payload.kind == PayloadKind::Stream
                      ? AppClass::of(AppKind::StreamAggregate)
                      : AppClass::other(to_string(s.payload));
  }
  if (auto it = j.find("est_mem_mb"); it != j.end() && !it->is_null())
    s.est_mem_mb = it->get<double>();
  if (auto it = j.find("est_cpu_pct"); it != j.end() && !it->is_null())
    s.est_cpu_pct = it->get<double>();
  s.instances = j.value("instances", 1);
  s.priority = j.value("priority", 0);
}

void to_json(json& j, const NodeState& n) {
  j = json{{"node_id", n.node_id},
           {"role", to_string(n.role)},
           {"cpu_cores", n.cpu_cores},
           {"mem_capacity_mb", n.mem_capacity_mb},
           {"mem_allocated_mb", n.mem_allocated_mb},
           {"cpu_allocated_pct", n.cpu_allocated_pct},
           {"running_instances", n.running_instances},
           {"last_heartbeat_us", n.last_heartbeat.count()},
           {"health", to_string(n.health)}};
}

void to_json(json& j, const Assignment& a) {
  j = json{{"instance_id", a.instance_id}, {"node_id", a.node_id}, {"runtime_class", a.runtime_class}};
}

void from_json(const json& j, Assignment& a) {
  j.at("instance_id").get_to(a.instance_id);
  j.at("node_id").get_to(a.node_id);
  j.at("runtime_class").get_to(a.runtime_class);
}

void to_json(json& j, const PlacementDecision& d) {
  j = json{{"workload_id", d.workload_id},
           {"assignments", d.assignments},
           {"decided_at_us", d.decided_at.count()},
           {"reason", to_string(d.reason)}};
}

void from_json(const json& j, PlacementDecision& d) {
  j.at("workload_id").get_to(d.workload_id);
  j.at("assignments").get_to(d.assignments);
  d.decided_at = TimePoint(j.at("decided_at_us").get<std::int64_t>());
  d.reason = parse_reason(j.at("reason").get<std::string>());
}

void to_json(json& j, const MetricsRecord& m) {
  j = json{{"instance_id", m.instance_id},
           {"workload_id", m.workload_id},
           {"node_id", m.node_id},
           {"runtime_class", m.runtime_class},
           {"app_class", m.app_class},
           {"cpu_avg_pct", m.cpu_avg_pct},
           {"mem_peak_mb", m.mem_peak_mb},
           {"proc_time_ms", m.proc_time_ms},
           {"boot_ms", m.boot_ms},
           {"started_at_us", m.started_at.count()},
           {"finished_at_us", m.finished_at.count()},
           {"outcome", m.outcome.success ? "Success" : "Failure"}};
  if (!m.outcome.success) j["failure_reason"] = m.outcome.failure_reason;
}

void from_json(const json& j, MetricsRecord& m) {
  j.at("instance_id").get_to(m.instance_id);
  m.workload_id = j.value("workload_id", std::string{});
  m.node_id = j.value("node_id", std::string{});
  j.at("runtime_class").get_to(m.runtime_class);
  if (j.contains("app_class")) j.at("app_class").get_to(m.app_class);
  m.cpu_avg_pct = j.value("cpu_avg_pct", 0.0);
  m.mem_peak_mb = j.value("mem_peak_mb", 0.0);
  m.proc_time_ms = j.value("proc_time_ms", 0.0);
  m.boot_ms = j.value("boot_ms", 0.0);
  m.started_at = TimePoint(j.value("started_at_us", std::int64_t{0}));
  m.finished_at = TimePoint(j.value("finished_at_us", std::int64_t{0}));
  const bool ok = j.value("outcome", std::string("Success")) == "Success";
  m.outcome = ok ? Outcome::ok() : Outcome::failure(j.value("failure_reason", std::string{}));
}

void to_json(json& j, const ClusterConfig& c) {
  json mem = json::object();
  for (const auto& [app, v] : c.default_est_mem_mb) mem[to_string(app)] = v;
  json cpu = json::object();
  for (const auto& [app, v] : c.default_est_cpu_pct) cpu[to_string(app)] = v;
  j = json{{"heartbeat_interval_ms", c.heartbeat_interval_ms},
           {"missed_heartbeats_suspect", c.missed_heartbeats_suspect},
           {"missed_heartbeats_unhealthy", c.missed_heartbeats_unhealthy},
           {"rebalance_threshold", c.rebalance_threshold},
           {"weight_mem", c.weight_mem},
           {"weight_cpu", c.weight_cpu},
           {"rng_seed", c.rng_seed},
           {"queue_retry_interval_ms", c.queue_retry_interval_ms},
           {"manager_schedulable", c.manager_schedulable},
           {"default_est_mem_mb", mem},
           {"default_est_cpu_pct", cpu},
           {"fallback_est_mem_mb", c.fallback_est_mem_mb},
           {"fallback_est_cpu_pct", c.fallback_est_cpu_pct}};
  j["time_scale"] = c.time_scale ? json(*c.time_scale) : json(nullptr);
}

void from_json(const json& j, ClusterConfig& c) {
  get_opt(j, "heartbeat_interval_ms", c.heartbeat_interval_ms);
  get_opt(j, "missed_heartbeats_suspect", c.missed_heartbeats_suspect);
  get_opt(j, "missed_heartbeats_unhealthy", c.missed_heartbeats_unhealthy);
  get_opt(j, "rebalance_threshold", c.rebalance_threshold);
  get_opt(j, "weight_mem", c.weight_mem);
  get_opt(j, "weight_cpu", c.weight_cpu);
  get_opt(j, "rng_seed", c.rng_seed);
  get_opt(j, "queue_retry_interval_ms", c.queue_retry_interval_ms);
  get_opt(j, "manager_schedulable", c.manager_schedulable);
  get_opt(j, "fallback_est_mem_mb", c.fallback_est_mem_mb);
  get_opt(j, "fallback_est_cpu_pct", c.fallback_est_cpu_pct);
  if (auto it = j.find("time_scale"); it != j.end()) {
    if (it->is_null()) {
      c.time_scale.reset();
    } else {
      c.time_scale = it->get<double>();
    }
  }
  if (auto it = j.find("default_est_mem_mb"); it != j.end()) {
    for (const auto& [k, v] : it->items()) c.default_est_mem_mb[parse_app_class(k)] = v.get<double>();
  }
  if (auto it = j.find("default_est_cpu_pct"); it != j.end()) {
    for (const auto& [k, v] : it->items()) c.default_est_cpu_pct[parse_app_class(k)] = v.get<double>();
  }
}

json error_to_json(const Error& e) {
  return json{{"code", to_string(e.code)}, {"detail", e.detail}};
}

}  // namespace hybridedge
