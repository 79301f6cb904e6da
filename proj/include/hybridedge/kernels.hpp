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

// The two workload kernels: per-user step aggregation over an activity CSV,
// and the categorized image output of the detection workloads.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "hybridedge/model.hpp"

namespace hybridedge {

struct ActivityRow {
  std::string user_id;
  std::string activity_date;
  std::uint64_t total_steps = 0;
  double total_distance = 0;
  double calories = 0;
};

/// Orders user ids numerically when both are digit strings, lexically
/// otherwise (digit strings first).
struct UserIdLess {
  bool operator()(const std::string& a, const std::string& b) const;
};

/// Header must name Id, ActivityDate, TotalSteps, TotalDistance and Calories
/// (any order, extra columns ignored). Errors: MalformedRow with the 1-based
/// line number, ParseError for a bad header.
Expected<std::vector<ActivityRow>> parse_activity_csv(std::string_view text);

struct AggregateReport {
  std::map<std::string, double, UserIdLess> per_user_mean_steps;
  std::string max_user;
  double max_mean = 0;
};

/// Mean TotalSteps per user and the user with the largest mean (ties go to
/// the smallest id). EmptyDataset on no rows.
Expected<AggregateReport> stream_aggregate(const std::vector<ActivityRow>& rows);

std::string report_to_csv(const AggregateReport& report);

struct Artifact {
  std::string name;
  std::filesystem::path path;

  friend bool operator==(const Artifact&, const Artifact&) = default;
};

/// Face, Vehicle, Body or Object; UnsupportedAppClass otherwise.
Expected<std::string> image_category(const AppClass& app);

/// Copies the payload to "<Category>_<instance_id>.jpg" inside out_dir.
Expected<Artifact> image_tag(const std::filesystem::path& payload_ref, const AppClass& app,
                             const std::string& instance_id, const std::filesystem::path& out_dir);

}  // namespace hybridedge
