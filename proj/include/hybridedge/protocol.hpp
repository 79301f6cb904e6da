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

// Manager <-> agent protocol: one JSON object per line,
//   {"v": 1, "type": "<Type>", "payload": {...}}
// Unknown fields are ignored; an unknown type is answered with
// Error(UnsupportedType).

#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hybridedge/backends.hpp"
#include "hybridedge/expected.hpp"
#include "hybridedge/monitor.hpp"

namespace hybridedge {

inline constexpr int kProtocolVersion = 1;

struct RegisterMsg {
  std::string node_id;
  double mem_capacity_mb = 4096;
  int cpu_cores = 4;
  std::vector<std::string> running;
  friend bool operator==(const RegisterMsg&, const RegisterMsg&) = default;
};

struct HeartbeatMsg {
  HeartbeatSnapshot snapshot;
  friend bool operator==(const HeartbeatMsg&, const HeartbeatMsg&) = default;
};

struct LaunchMsg {
  LaunchRequest request;
  friend bool operator==(const LaunchMsg&, const LaunchMsg&) = default;
};

struct TerminateMsg {
  std::string instance_id;
  friend bool operator==(const TerminateMsg&, const TerminateMsg&) = default;
};

struct MetricsReportMsg {
  MetricsRecord record;
  int attempt = 0;
  friend bool operator==(const MetricsReportMsg&, const MetricsReportMsg&) = default;
};

struct AckMsg {
  std::string ref;
  friend bool operator==(const AckMsg&, const AckMsg&) = default;
};

struct ErrorMsg {
  std::string ref;
  std::string code;  // an Errc name
  std::string detail;
  friend bool operator==(const ErrorMsg&, const ErrorMsg&) = default;
};

using Message = std::variant<RegisterMsg, HeartbeatMsg, LaunchMsg, TerminateMsg, MetricsReportMsg,
                             AckMsg, ErrorMsg>;

std::string_view message_type(const Message& msg);

/// One line, no trailing newline.
std::string encode(const Message& msg);

/// A line that failed to decode, with the reply the peer should get.
struct DecodeFailure {
  Error error;
  ErrorMsg reply;
  bool close_connection = false;  // set on a version mismatch
};

Expected<Message, DecodeFailure> decode(std::string_view line);

ErrorMsg make_error(std::string ref, Errc code, std::string detail = {});

}  // namespace hybridedge
