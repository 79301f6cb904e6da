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

// Builders and generators shared by the test binaries.

#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hybridedge/model.hpp"

namespace hybridedge::testing {

inline NodeState worker(std::string id, double mem_capacity = 4096, int cores = 4, double mem_alloc = 0,
                        double cpu_alloc = 0) {
  NodeState n;
  n.node_id = std::move(id);
  n.mem_capacity_mb = mem_capacity;
  n.cpu_cores = cores;
  n.mem_allocated_mb = mem_alloc;
  n.cpu_allocated_pct = cpu_alloc;
  return n;
}

inline WorkloadSpec spec(std::string id, Payload payload, AppClass app, int instances = 1) {
  WorkloadSpec s;
  s.id = std::move(id);
  s.payload = std::move(payload);
  s.app_class = std::move(app);
  s.instances = instances;
  return s;
}

inline ValidatedSpec validated(const WorkloadSpec& s, const ClusterConfig& cfg = {}) {
  return validate_workload(s, cfg).value();
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            fmt::format("hybridedge-test-{}-{}", ::getpid(), counter++);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Small helpers over a seeded engine for hand-rolled property generators.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : eng_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(eng_); }
  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(integer(0, static_cast<int>(v.size()) - 1))];
  }
  std::string word(int min_len, int max_len) {
    static constexpr char kChars[] = "abcdefghijklmnopqrstuvwxyz0123456789-_";
    std::string s(static_cast<std::size_t>(integer(min_len, max_len)), 'a');
    for (auto& c : s) c = kChars[integer(0, sizeof(kChars) - 2)];
    return s;
  }
  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace hybridedge::testing
