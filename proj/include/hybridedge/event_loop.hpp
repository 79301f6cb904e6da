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

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <future>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

#include "hybridedge/model.hpp"

namespace hybridedge {

/// A single-threaded executor with a clock. Manager and agent cores only ever
/// run on their loop, which serializes every state transition.
class EventLoop {
 public:
  using Task = std::function<void()>;

  virtual ~EventLoop() = default;
  virtual TimePoint now() const = 0;
  /// Runs `task` after everything already due, in FIFO order.
  virtual void post(Task task) = 0;
  virtual void post_at(TimePoint when, Task task) = 0;
  void post_after(Duration delay, Task task) { post_at(now() + delay, std::move(task)); }
};

namespace detail {

struct TimedTask {
  TimePoint when;
  std::uint64_t seq;
  EventLoop::Task task;
};

struct LaterFirst {
  bool operator()(const TimedTask& a, const TimedTask& b) const {
    return a.when != b.when ? a.when > b.when : a.seq > b.seq;
  }
};

using TaskQueue = std::priority_queue<TimedTask, std::vector<TimedTask>, LaterFirst>;

}  // namespace detail

/// Discrete-event loop on a virtual clock. Tasks run in (time, post order),
/// so a run is a pure function of what was posted.
class SimLoop final : public EventLoop {
 public:
  TimePoint now() const override { return now_; }
  void post(Task task) override { post_at(now_, std::move(task)); }
  void post_at(TimePoint when, Task task) override;

  /// Runs every task due at or before `until`, then parks the clock there.
  void run_until(TimePoint until);
  bool idle() const { return queue_.empty(); }
  std::uint64_t tasks_run() const { return tasks_run_; }

 private:
  TimePoint now_{0};
  std::uint64_t seq_ = 0;
  std::uint64_t tasks_run_ = 0;
  detail::TaskQueue queue_;
};

/// Wall-clock loop running on its own thread. post/post_at are thread-safe.
class RealLoop final : public EventLoop {
 public:
  RealLoop();
  ~RealLoop() override;
  RealLoop(const RealLoop&) = delete;
  RealLoop& operator=(const RealLoop&) = delete;

  /// Microseconds since the loop was constructed.
  TimePoint now() const override;
  void post(Task task) override { post_at(now(), std::move(task)); }
  void post_at(TimePoint when, Task task) override;

  /// Stops the thread; pending tasks are dropped. Idempotent.
  void stop();

  /// Runs `fn` on the loop and waits for its result.
  template <typename Fn>
  auto call(Fn fn) -> decltype(fn()) {
    using R = decltype(fn());
    auto promise = std::make_shared<std::promise<R>>();
    auto future = promise->get_future();
    post([promise, fn = std::move(fn)]() mutable {
      try {
        if constexpr (std::is_void_v<R>) {
          fn();
          promise->set_value();
        } else {
          promise->set_value(fn());
        }
      } catch (...) {
        promise->set_exception(std::current_exception());
      }
    });
    return future.get();
  }

 private:
  void run(std::stop_token stop);

  const std::chrono::steady_clock::time_point epoch_;
  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  detail::TaskQueue queue_;
  std::uint64_t seq_ = 0;
  bool stopped_ = false;
  std::jthread thread_;
};

}  // namespace hybridedge
