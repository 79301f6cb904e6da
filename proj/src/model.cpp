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

#include "hybridedge/model.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace hybridedge {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

constexpr std::string_view kAppNames[] = {"FaceDetect",   "CarDetect",      "BodyDetect",
                                          "ObjectDetect", "StreamAggregate"};

}  // namespace

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::EmptyId: return "EmptyId";
    case Errc::ZeroInstances: return "ZeroInstances";
    case Errc::NegativeEstimate: return "NegativeEstimate";
    case Errc::NonPositiveBaseline: return "NonPositiveBaseline";
    case Errc::ZeroCapacity: return "ZeroCapacity";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingCatchAll: return "MissingCatchAll";
    case Errc::UnknownFlavor: return "UnknownFlavor";
    case Errc::StaleSnapshot: return "StaleSnapshot";
    case Errc::NoCapacity: return "NoCapacity";
    case Errc::UnknownProfile: return "UnknownProfile";
    case Errc::KernelFailure: return "KernelFailure";
    case Errc::SpawnFailure: return "SpawnFailure";
    case Errc::NonZeroExit: return "NonZeroExit";
    case Errc::Timeout: return "Timeout";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::UnreadablePayload: return "UnreadablePayload";
    case Errc::UnsupportedAppClass: return "UnsupportedAppClass";
    case Errc::ProtocolVersionMismatch: return "ProtocolVersionMismatch";
    case Errc::UnsupportedType: return "UnsupportedType";
    case Errc::MalformedMessage: return "MalformedMessage";
    case Errc::Busy: return "Busy";
    case Errc::NotFound: return "NotFound";
    case Errc::UnexpectedMessage: return "UnexpectedMessage";
    case Errc::ValidationFailed: return "ValidationFailed";
    case Errc::DuplicateWorkloadId: return "DuplicateWorkloadId";
    case Errc::UnknownFilterField: return "UnknownFilterField";
    case Errc::EmptySet: return "EmptySet";
    case Errc::InvalidScenario: return "InvalidScenario";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

std::string Error::message() const {
  if (detail.empty()) return std::string(to_string(code));
  return fmt::format("{}: {}", to_string(code), detail);
}

std::string to_string(const Payload& p) {
  switch (p.kind) {
    case PayloadKind::Image: return "Image";
    case PayloadKind::Stream: return "Stream";
    case PayloadKind::Custom: return p.custom_name;
  }
  return {};
}

std::string to_string(const AppClass& a) {
  if (a.kind == AppKind::Other) return a.other_name;
  return std::string(kAppNames[static_cast<int>(a.kind)]);
}

Payload parse_payload(std::string_view text) {
  if (iequals(text, "image")) return Payload::image();
  if (iequals(text, "stream")) return Payload::stream();
  return Payload::custom(std::string(text));
}

AppClass parse_app_class(std::string_view text) {
  for (int i = 0; i < 5; ++i) {
    if (iequals(text, kAppNames[i])) return AppClass::of(static_cast<AppKind>(i));
  }
  return AppClass::other(std::string(text));
}

const std::vector<AppClass>& builtin_app_classes() {
  static const std::vector<AppClass> all = {
      AppClass::of(AppKind::FaceDetect), AppClass::of(AppKind::CarDetect),
      AppClass::of(AppKind::BodyDetect), AppClass::of(AppKind::ObjectDetect),
      AppClass::of(AppKind::StreamAggregate)};
  return all;
}

std::string_view to_string(RuntimeKind k) {
  return k == RuntimeKind::Container ? "Container" : "Unikernel";
}

std::optional<RuntimeKind> parse_runtime_kind(std::string_view text) {
  if (iequals(text, "container")) return RuntimeKind::Container;
  if (iequals(text, "unikernel")) return RuntimeKind::Unikernel;
  return std::nullopt;
}

std::string to_string(const RuntimeClass& rc) {
  return fmt::format("{}({})", to_string(rc.kind), rc.flavor);
}

std::string_view to_string(NodeRole r) { return r == NodeRole::Manager ? "Manager" : "Worker"; }

std::string_view to_string(Health h) {
  switch (h) {
    case Health::Healthy: return "Healthy";
    case Health::Suspect: return "Suspect";
    case Health::Unhealthy: return "Unhealthy";
  }
  return "Unknown";
}

std::string_view to_string(PlacementReason r) {
  switch (r) {
    case PlacementReason::Fresh: return "Fresh";
    case PlacementReason::Rebalance: return "Rebalance";
    case PlacementReason::RequeueAfterFailure: return "RequeueAfterFailure";
    case PlacementReason::DequeuedFromAdmissionQueue: return "DequeuedFromAdmissionQueue";
  }
  return "Unknown";
}

std::vector<std::string> ResourceProfile::violations() const {
  std::vector<std::string> out;
  if (cpu_pct_mean < 0) out.emplace_back("cpu_pct_mean < 0");
  if (cpu_pct_spread < 0) out.emplace_back("cpu_pct_spread < 0");
  if (!(mem_mb_mean > 0)) out.emplace_back("mem_mb_mean <= 0");
  if (mem_mb_spread < 0) out.emplace_back("mem_mb_spread < 0");
  if (!(proc_time_ms_mean > 0)) out.emplace_back("proc_time_ms_mean <= 0");
  if (proc_time_ms_spread < 0) out.emplace_back("proc_time_ms_spread < 0");
  if (boot_ms < 0) out.emplace_back("boot_ms < 0");
  return out;
}

std::map<AppClass, double> ClusterConfig::default_mem_estimates() {
  return {{AppClass::of(AppKind::FaceDetect), 93},
          {AppClass::of(AppKind::CarDetect), 93},
          {AppClass::of(AppKind::BodyDetect), 82},
          {AppClass::of(AppKind::ObjectDetect), 200},
          {AppClass::of(AppKind::StreamAggregate), 71}};
}

std::map<AppClass, double> ClusterConfig::default_cpu_estimates() {
  return {{AppClass::of(AppKind::FaceDetect), 26},
          {AppClass::of(AppKind::CarDetect), 26},
          {AppClass::of(AppKind::BodyDetect), 26},
          {AppClass::of(AppKind::ObjectDetect), 100},
          {AppClass::of(AppKind::StreamAggregate), 0.29}};
}

double ClusterConfig::default_mem_for(const AppClass& a) const {
  auto it = default_est_mem_mb.find(a);
  return it == default_est_mem_mb.end() ? fallback_est_mem_mb : it->second;
}

double ClusterConfig::default_cpu_for(const AppClass& a) const {
  auto it = default_est_cpu_pct.find(a);
  return it == default_est_cpu_pct.end() ? fallback_est_cpu_pct : it->second;
}

std::vector<std::string> ClusterConfig::violations() const {
  std::vector<std::string> out;
  if (!(heartbeat_interval_ms > 0)) out.emplace_back("heartbeat_interval_ms must be > 0");
  if (missed_heartbeats_suspect < 1) out.emplace_back("missed_heartbeats_suspect must be >= 1");
  if (missed_heartbeats_unhealthy < missed_heartbeats_suspect)
    out.emplace_back("missed_heartbeats_unhealthy must be >= missed_heartbeats_suspect");
  if (rebalance_threshold < 1) out.emplace_back("rebalance_threshold must be >= 1");
  if (weight_mem < 0 || weight_cpu < 0) out.emplace_back("scheduler weights must be >= 0");
  if (!(weight_mem + weight_cpu > 0)) out.emplace_back("weight_mem + weight_cpu must be > 0");
  if (time_scale && !(*time_scale > 0)) out.emplace_back("time_scale must be > 0");
  if (!(queue_retry_interval_ms > 0)) out.emplace_back("queue_retry_interval_ms must be > 0");
  for (const auto& [app, v] : default_est_mem_mb)
    if (v < 0) out.push_back(fmt::format("default_est_mem_mb[{}] < 0", to_string(app)));
  for (const auto& [app, v] : default_est_cpu_pct)
    if (v < 0) out.push_back(fmt::format("default_est_cpu_pct[{}] < 0", to_string(app)));
  return out;
}

struct ValidatedSpecAccess {
  static ValidatedSpec make(WorkloadSpec s) { return ValidatedSpec(std::move(s)); }
};

Expected<ValidatedSpec, std::vector<Error>> validate_workload(const WorkloadSpec& spec,
                                                              const ClusterConfig& config) {
  std::vector<Error> errors;
  if (spec.id.empty()) errors.push_back({Errc::EmptyId, "id"});
  if (spec.instances < 1) errors.push_back({Errc::ZeroInstances, "instances"});
  if (spec.est_mem_mb && !(*spec.est_mem_mb >= 0))
    errors.push_back({Errc::NegativeEstimate, "est_mem_mb"});
  if (spec.est_cpu_pct && !(*spec.est_cpu_pct >= 0))
    errors.push_back({Errc::NegativeEstimate, "est_cpu_pct"});
  if (!errors.empty()) return unexpected(std::move(errors));

  WorkloadSpec filled = spec;
  if (!filled.est_mem_mb) filled.est_mem_mb = config.default_mem_for(spec.app_class);
  if (!filled.est_cpu_pct) filled.est_cpu_pct = config.default_cpu_for(spec.app_class);
  return ValidatedSpecAccess::make(std::move(filled));
}

Expected<double> mem_saving_pct(double baseline_mb, double alternative_mb) {
  if (!(baseline_mb > 0)) return fail(Errc::NonPositiveBaseline, fmt::format("{}", baseline_mb));
  return (baseline_mb - alternative_mb) / baseline_mb * 100.0;
}

Expected<Utilization> node_utilization(const NodeState& node) {
  if (!(node.mem_capacity_mb > 0)) return fail(Errc::ZeroCapacity, "mem_capacity_mb");
  if (node.cpu_cores <= 0) return fail(Errc::ZeroCapacity, "cpu_cores");
  auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return Utilization{clamp01(node.cpu_allocated_pct / node.cpu_capacity_pct()),
                     clamp01(node.mem_allocated_mb / node.mem_capacity_mb)};
}

}  // namespace hybridedge
