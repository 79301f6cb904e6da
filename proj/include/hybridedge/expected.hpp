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

#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>

namespace hybridedge {

/// Every failure the library reports by value. Grouped by the module that
/// raises it; the detail string on Error names the offending field or input.
enum class Errc {
  // core-model
  EmptyId,
  ZeroInstances,
  NegativeEstimate,
  NonPositiveBaseline,
  ZeroCapacity,
  InvalidConfig,
  // classifier
  ParseError,
  MissingCatchAll,
  UnknownFlavor,
  // monitor
  StaleSnapshot,
  // scheduler
  NoCapacity,
  // backends
  UnknownProfile,
  KernelFailure,
  SpawnFailure,
  NonZeroExit,
  Timeout,
  EmptyDataset,
  MalformedRow,
  UnreadablePayload,
  UnsupportedAppClass,
  // agent / protocol
  ProtocolVersionMismatch,
  UnsupportedType,
  MalformedMessage,
  Busy,
  NotFound,
  UnexpectedMessage,
  // manager
  ValidationFailed,
  DuplicateWorkloadId,
  UnknownFilterField,
  EmptySet,
  // scenarios / io
  InvalidScenario,
  IoError,
};

std::string_view to_string(Errc code);

struct Error {
  Errc code;
  std::string detail;

  std::string message() const;
  friend bool operator==(const Error&, const Error&) = default;
};

template <typename E>
struct Unexpected {
  E error;
};

template <typename E>
Unexpected<std::decay_t<E>> unexpected(E&& e) {
  return {std::forward<E>(e)};
}

inline Unexpected<Error> fail(Errc code, std::string detail = {}) {
  return {Error{code, std::move(detail)}};
}

class BadExpectedAccess : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Value-or-error return type. T and E must be distinct types.
template <typename T, typename E = Error>
class Expected {
  static_assert(!std::is_same_v<T, E>);

 public:
  using value_type = T;
  using error_type = E;

  Expected(const T& v) : storage_(std::in_place_index<0>, v) {}
  Expected(T&& v) : storage_(std::in_place_index<0>, std::move(v)) {}
  template <typename G>
  Expected(Unexpected<G> u) : storage_(std::in_place_index<1>, std::move(u.error)) {}

  bool has_value() const noexcept { return storage_.index() == 0; }
  explicit operator bool() const noexcept { return has_value(); }

  T& value() & {
    check();
    return std::get<0>(storage_);
  }
  const T& value() const& {
    check();
    return std::get<0>(storage_);
  }
  T&& value() && {
    check();
    return std::get<0>(std::move(storage_));
  }

  const E& error() const& {
    if (has_value()) throw BadExpectedAccess("Expected holds a value");
    return std::get<1>(storage_);
  }
  E&& error() && {
    if (has_value()) throw BadExpectedAccess("Expected holds a value");
    return std::get<1>(std::move(storage_));
  }

  T& operator*() & { return value(); }
  const T& operator*() const& { return value(); }
  T* operator->() { return &value(); }
  const T* operator->() const { return &value(); }

 private:
  void check() const {
    if (!has_value()) {
      if constexpr (std::is_same_v<E, Error>) {
        throw BadExpectedAccess(std::get<1>(storage_).message());
      } else {
        throw BadExpectedAccess("Expected holds an error");
      }
    }
  }

  std::variant<T, E> storage_;
};

/// Stand-in for Expected<void>.
struct Ok {
  friend bool operator==(Ok, Ok) = default;
};

}  // namespace hybridedge
