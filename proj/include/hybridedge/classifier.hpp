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

// Application-aware routing: workload -> runtime class.

#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hybridedge/calibration.hpp"
#include "hybridedge/model.hpp"

namespace hybridedge {

struct ClassificationRule {
  std::optional<Payload> match_payload;
  std::optional<AppClass> match_app_class;
  RuntimeClass target;

  bool is_catch_all() const { return !match_payload && !match_app_class; }
  bool matches(const WorkloadSpec& spec) const;

  friend bool operator==(const ClassificationRule&, const ClassificationRule&) = default;
};

/// An ordered rule list whose last (and only last) rule is a catch-all.
class RuleTable {
 public:
  /// Image -> docker, Stream -> unikraft, anything else -> docker.
  static RuleTable defaults();

  /// Checks the catch-all invariant and that every target flavor is
  /// registered with a matching kind.
  static Expected<RuleTable> make(std::vector<ClassificationRule> rules,
                                  const CalibrationRegistry& registry);

  const std::vector<ClassificationRule>& rules() const { return rules_; }

 private:
  explicit RuleTable(std::vector<ClassificationRule> rules) : rules_(std::move(rules)) {}
  std::vector<ClassificationRule> rules_;
};

/// Parses a JSON rule array; each element carries optional "payload_kind"
/// and "app_class" plus "kind" and "flavor". A blank document yields the
/// default table.
Expected<RuleTable> load_rules(std::string_view document, const CalibrationRegistry& registry);

/// Same, from an already-parsed array (used by the cluster config file).
Expected<RuleTable> rules_from_json(const nlohmann::json& rules, const CalibrationRegistry& registry);
nlohmann::json rules_to_json(const RuleTable& table);

/// First matching rule's target. Total on any RuleTable.
RuntimeClass classify(const ValidatedSpec& spec, const RuleTable& table);

}  // namespace hybridedge
