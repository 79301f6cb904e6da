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

#include "hybridedge/protocol.hpp"

#include <fmt/format.h>

#include "hybridedge/json_codec.hpp"

namespace hybridedge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json launch_to_json(const LaunchRequest& r) {
  json j{{"instance_id", r.instance_id},
         {"workload_id", r.workload_id},
         {"runtime_class", r.runtime_class},
         {"app_class", r.app_class},
         {"payload_ref", r.payload_ref},
         {"seed", r.seed},
         {"attempt", r.attempt},
         {"reserved_mem_mb", r.reserved_mem_mb},
         {"reserved_cpu_pct", r.reserved_cpu_pct}};
  if (r.profile_override) j["profile_override"] = *r.profile_override;
  return j;
}

LaunchRequest launch_from_json(const json& j) {
  LaunchRequest r;
  j.at("instance_id").get_to(r.instance_id);
  r.workload_id = j.value("workload_id", std::string{});
  j.at("runtime_class").get_to(r.runtime_class);
  j.at("app_class").get_to(r.app_class);
  r.payload_ref = j.value("payload_ref", std::string{});
  r.seed = j.value("seed", std::uint64_t{0});
  r.attempt = j.value("attempt", 0);
  r.reserved_mem_mb = j.value("reserved_mem_mb", 0.0);
  r.reserved_cpu_pct = j.value("reserved_cpu_pct", 0.0);
  if (auto it = j.find("profile_override"); it != j.end() && !it->is_null())
    r.profile_override = it->get<ResourceProfile>();
  return r;
}

json payload_of(const Message& msg) {
  return std::visit(
      overloaded{
          [](const RegisterMsg& m) {
            return json{{"node_id", m.node_id},
                        {"mem_capacity_mb", m.mem_capacity_mb},
                        {"cpu_cores", m.cpu_cores},
                        {"running", m.running}};
          },
          [](const HeartbeatMsg& m) {
            const auto& s = m.snapshot;
            return json{{"node_id", s.node_id},
                        {"mem_allocated_mb", s.mem_allocated_mb},
                        {"cpu_allocated_pct", s.cpu_allocated_pct},
                        {"running_instances", s.running_instances},
                        {"sent_at_us", s.sent_at.count()}};
          },
          [](const LaunchMsg& m) { return launch_to_json(m.request); },
          [](const TerminateMsg& m) { return json{{"instance_id", m.instance_id}}; },
          [](const MetricsReportMsg& m) { return json{{"record", m.record}, {"attempt", m.attempt}}; },
          [](const AckMsg& m) { return json{{"ref", m.ref}}; },
          [](const ErrorMsg& m) { return json{{"ref", m.ref}, {"code", m.code}, {"detail", m.detail}}; },
      },
      msg);
}

Message parse_payload_as(std::string_view type, const json& p) {
  if (type == "Register") {
    RegisterMsg m;
    p.at("node_id").get_to(m.node_id);
    m.mem_capacity_mb = p.value("mem_capacity_mb", 4096.0);
    m.cpu_cores = p.value("cpu_cores", 4);
    m.running = p.value("running", std::vector<std::string>{});
    return m;
  }
  if (type == "Heartbeat") {
    HeartbeatMsg m;
    auto& s = m.snapshot;
    p.at("node_id").get_to(s.node_id);
    s.mem_allocated_mb = p.value("mem_allocated_mb", 0.0);
    s.cpu_allocated_pct = p.value("cpu_allocated_pct", 0.0);
    s.running_instances = p.value("running_instances", std::set<std::string>{});
    s.sent_at = TimePoint(p.value("sent_at_us", std::int64_t{0}));
    return m;
  }
  if (type == "Launch") return LaunchMsg{launch_from_json(p)};
  if (type == "Terminate") return TerminateMsg{p.at("instance_id").get<std::string>()};
  if (type == "MetricsReport") return MetricsReportMsg{p.at("record").get<MetricsRecord>(), p.value("attempt", 0)};
  if (type == "Ack") return AckMsg{p.value("ref", std::string{})};
  return ErrorMsg{p.value("ref", std::string{}), p.value("code", std::string{}),
                  p.value("detail", std::string{})};
}

bool known_type(std::string_view type) {
  for (std::string_view t : {"Register", "Heartbeat", "Launch", "Terminate", "MetricsReport", "Ack", "Error"})
    if (t == type) return true;
  return false;
}

}  // namespace

std::string_view message_type(const Message& msg) {
  return std::visit(overloaded{
                        [](const RegisterMsg&) { return std::string_view("Register"); },
                        [](const HeartbeatMsg&) { return std::string_view("Heartbeat"); },
                        [](const LaunchMsg&) { return std::string_view("Launch"); },
                        [](const TerminateMsg&) { return std::string_view("Terminate"); },
                        [](const MetricsReportMsg&) { return std::string_view("MetricsReport"); },
                        [](const AckMsg&) { return std::string_view("Ack"); },
                        [](const ErrorMsg&) { return std::string_view("Error"); },
                    },
                    msg);
}

std::string encode(const Message& msg) {
  json j{{"v", kProtocolVersion}, {"type", message_type(msg)}, {"payload", payload_of(msg)}};
  return j.dump();
}

ErrorMsg make_error(std::string ref, Errc code, std::string detail) {
  return ErrorMsg{std::move(ref), std::string(to_string(code)), std::move(detail)};
}

Expected<Message, DecodeFailure> decode(std::string_view line) {
  auto failure = [](Errc code, std::string detail, bool close = false) {
    return unexpected(DecodeFailure{{code, detail}, make_error("", code, detail), close});
  };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    return failure(Errc::MalformedMessage, e.what());
  }
  if (!j.is_object()) return failure(Errc::MalformedMessage, "message is not an object");
  const auto v = j.find("v");
  if (v == j.end() || !v->is_number_integer()) return failure(Errc::MalformedMessage, "missing version");
  if (v->get<int>() != kProtocolVersion)
    return failure(Errc::ProtocolVersionMismatch,
                   fmt::format("got v{}, speak v{}", v->get<int>(), kProtocolVersion), true);
  const auto type = j.find("type");
  if (type == j.end() || !type->is_string()) return failure(Errc::MalformedMessage, "missing type");
  const auto type_name = type->get<std::string>();
  if (!known_type(type_name)) return failure(Errc::UnsupportedType, type_name);
  const json payload = j.value("payload", json::object());
  try {
    return parse_payload_as(type_name, payload);
  } catch (const json::exception& e) {
    return failure(Errc::MalformedMessage, fmt::format("{}: {}", type_name, e.what()));
  }
}

}  // namespace hybridedge
