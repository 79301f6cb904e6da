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

// nlohmann::json conversions for the domain types. Timestamps travel as
// integer microseconds ("*_us"); everything else keeps its natural unit.

#pragma once

#include <json.hpp>

#include "hybridedge/model.hpp"

namespace hybridedge {

using json = nlohmann::json;

void to_json(json& j, const Payload& p);
void from_json(const json& j, Payload& p);
void to_json(json& j, const AppClass& a);
void from_json(const json& j, AppClass& a);
void to_json(json& j, const RuntimeClass& rc);
void from_json(const json& j, RuntimeClass& rc);
void to_json(json& j, const ResourceProfile& p);
void from_json(const json& j, ResourceProfile& p);
void to_json(json& j, const WorkloadSpec& s);
void from_json(const json& j, WorkloadSpec& s);
void to_json(json& j, const NodeState& n);
void to_json(json& j, const Assignment& a);
void from_json(const json& j, Assignment& a);
void to_json(json& j, const PlacementDecision& d);
void from_json(const json& j, PlacementDecision& d);
void to_json(json& j, const MetricsRecord& m);
void from_json(const json& j, MetricsRecord& m);
void to_json(json& j, const ClusterConfig& c);
/// Missing fields keep the value already in `c`.
void from_json(const json& j, ClusterConfig& c);

json error_to_json(const Error& e);

}  // namespace hybridedge
