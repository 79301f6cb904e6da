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

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "hybridedge/expected.hpp"
#include "hybridedge/model.hpp"

namespace hybridedge {

/// How much of a profile entry comes from measurement.
enum class Calibration {
  Measured,      // every quantified field came from a measurement
  Partial,       // some fields were filled from the kind's reference entry
  Uncalibrated,  // a copy of the reference entry
};

std::string_view to_string(Calibration c);

struct ProfileEntry {
  ResourceProfile profile;
  Calibration calibration = Calibration::Measured;
  std::string note;
};

/// Registered flavors plus the (flavor, app_class) -> ResourceProfile cost
/// table consumed by the simulated backend.
class CalibrationRegistry {
 public:
  /// The shipped table. Range figures are stored as midpoint +/- half-width.
  static CalibrationRegistry defaults();

  /// Parses a calibration document:
  ///   {"flavors": {"docker": "Container", ...},
  ///    "profiles": {"docker": {"StreamAggregate": {<7 fields>, "calibration": "..."}}},
  ///    "reference": {"native": {"CarDetect": {...}}}}
  /// Flavors missing from "flavors" keep their registration from `base`.
  static Expected<CalibrationRegistry> from_json(std::string_view document,
                                                 const CalibrationRegistry& base = {});
  std::string to_json() const;

  void register_flavor(const std::string& flavor, RuntimeKind kind);
  void set(const std::string& flavor, const AppClass& app, ProfileEntry entry);
  void set_reference(const std::string& label, const AppClass& app, ResourceProfile profile);

  std::optional<RuntimeKind> flavor_kind(std::string_view flavor) const;
  bool has_flavor(std::string_view flavor) const { return flavor_kind(flavor).has_value(); }
  const ProfileEntry* find(std::string_view flavor, const AppClass& app) const;
  const ResourceProfile* find_reference(std::string_view label, const AppClass& app) const;

  const std::map<std::string, RuntimeKind, std::less<>>& flavors() const { return flavors_; }
  const std::map<std::pair<std::string, AppClass>, ProfileEntry>& entries() const {
    return entries_;
  }
  const std::map<std::pair<std::string, AppClass>, ResourceProfile>& references() const {
    return references_;
  }

  /// Every problem in the table: invalid profiles, entries for unregistered
  /// flavors, and missing default flavor x default app_class pairs.
  std::vector<std::string> validate() const;

 private:
  std::map<std::string, RuntimeKind, std::less<>> flavors_;
  std::map<std::pair<std::string, AppClass>, ProfileEntry> entries_;
  std::map<std::pair<std::string, AppClass>, ResourceProfile> references_;
};

/// The six flavors shipped by default, containers first.
const std::vector<RuntimeClass>& default_flavors();

}  // namespace hybridedge
