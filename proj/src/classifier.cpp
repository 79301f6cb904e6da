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

#include "hybridedge/classifier.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

#include "hybridedge/json_codec.hpp"

namespace hybridedge {

namespace {

// 1-based line of a byte offset, for parse error reporting.
std::size_t line_of(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + byte, '\n'));
}

}  // namespace

bool ClassificationRule::matches(const WorkloadSpec& spec) const {
  if (match_payload && *match_payload != spec.payload) return false;
  if (match_app_class && *match_app_class != spec.app_class) return false;
  return true;
}

RuleTable RuleTable::defaults() {
  return RuleTable({
      {Payload::image(), std::nullopt, {RuntimeKind::Container, "docker"}},
      {Payload::stream(), std::nullopt, {RuntimeKind::Unikernel, "unikraft"}},
      {std::nullopt, std::nullopt, {RuntimeKind::Container, "docker"}},
  });
}

Expected<RuleTable> RuleTable::make(std::vector<ClassificationRule> rules,
                                    const CalibrationRegistry& registry) {
  if (rules.empty() || !rules.back().is_catch_all())
    return fail(Errc::MissingCatchAll, "the last rule must match everything");
  for (std::size_t i = 0; i + 1 < rules.size(); ++i) {
    if (rules[i].is_catch_all())
      return fail(Errc::MissingCatchAll, fmt::format("rule {} is a catch-all but not last", i + 1));
  }
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& target = rules[i].target;
    auto kind = registry.flavor_kind(target.flavor);
    if (!kind) return fail(Errc::UnknownFlavor, fmt::format("rule {}: {}", i + 1, target.flavor));
    if (*kind != target.kind)
      return fail(Errc::UnknownFlavor, fmt::format("rule {}: {} is not a {} flavor", i + 1,
                                                   target.flavor, to_string(target.kind)));
  }
  return RuleTable(std::move(rules));
}

Expected<RuleTable> rules_from_json(const json& rules, const CalibrationRegistry& registry) {
  if (!rules.is_array()) return fail(Errc::ParseError, "rules must be an array");
  std::vector<ClassificationRule> out;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const auto& r = rules[i];
    if (!r.is_object()) return fail(Errc::ParseError, fmt::format("rule {} is not an object", i + 1));
    ClassificationRule rule;
    try {
      if (r.contains("payload_kind")) rule.match_payload = r.at("payload_kind").get<Payload>();
      if (r.contains("app_class")) rule.match_app_class = r.at("app_class").get<AppClass>();
      rule.target = r.get<RuntimeClass>();
    } catch (const json::exception& e) {
      return fail(Errc::ParseError, fmt::format("rule {}: {}", i + 1, e.what()));
    }
    out.push_back(std::move(rule));
  }
  return RuleTable::make(std::move(out), registry);
}

Expected<RuleTable> load_rules(std::string_view document, const CalibrationRegistry& registry) {
  if (std::all_of(document.begin(), document.end(), [](unsigned char c) { return std::isspace(c); }))
    return RuleTable::defaults();
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    return fail(Errc::ParseError, fmt::format("line {}: {}", line_of(document, e.byte), e.what()));
  }
  if (doc.is_object() && doc.contains("rules")) return rules_from_json(doc["rules"], registry);
  return rules_from_json(doc, registry);
}

json rules_to_json(const RuleTable& table) {
  json out = json::array();
  for (const auto& rule : table.rules()) {
    json r = rule.target;
    if (rule.match_payload) r["payload_kind"] = *rule.match_payload;
    if (rule.match_app_class) r["app_class"] = *rule.match_app_class;
    out.push_back(std::move(r));
  }
  return out;
}

RuntimeClass classify(const ValidatedSpec& spec, const RuleTable& table) {
  for (const auto& rule : table.rules()) {
    if (rule.matches(spec.spec())) return rule.target;
  }
  // Unreachable: RuleTable guarantees a trailing catch-all.
  return table.rules().back().target;
}

}  // namespace hybridedge
