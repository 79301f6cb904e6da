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

#include "hybridedge/event_loop.hpp"

#include <cstdio>
#include <exception>

namespace hybridedge {

void SimLoop::post_at(TimePoint when, Task task) {
  queue_.push({std::max(when, now_), seq_++, std::move(task)});
}

void SimLoop::run_until(TimePoint until) {
  while (!queue_.empty() && queue_.top().when <= until) {
    // priority_queue::top is const; the task is moved out before pop.
    auto next = std::move(const_cast<detail::TimedTask&>(queue_.top()));
    queue_.pop();
    now_ = next.when;
    ++tasks_run_;
    next.task();
  }
  if (until > now_) now_ = until;
}

RealLoop::RealLoop()
    : epoch_(std::chrono::steady_clock::now()),
      thread_([this](std::stop_token st) { run(st); }) {}

RealLoop::~RealLoop() { stop(); }

TimePoint RealLoop::now() const {
  return std::chrono::duration_cast<TimePoint>(std::chrono::steady_clock::now() - epoch_);
}

void RealLoop::post_at(TimePoint when, Task task) {
  {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    queue_.push({when, seq_++, std::move(task)});
  }
  cv_.notify_one();
}

void RealLoop::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopped_) return;
    stopped_ = true;
  }
  thread_.request_stop();
  cv_.notify_all();
  if (thread_.joinable() && thread_.get_id() != std::this_thread::get_id()) thread_.join();
  std::lock_guard lock(mu_);
  queue_ = {};
}

void RealLoop::run(std::stop_token stop) {
  std::unique_lock lock(mu_);
  while (!stop.stop_requested()) {
    if (queue_.empty()) {
      cv_.wait(lock, stop, [this] { return !queue_.empty(); });
      continue;
    }
    const TimePoint due = queue_.top().when;
    const TimePoint current = now();
    if (due > current) {
      const auto deadline = epoch_ + due;
      cv_.wait_until(lock, stop, deadline, [this, due] { return !queue_.empty() && queue_.top().when < due; });
      continue;
    }
    auto next = std::move(const_cast<detail::TimedTask&>(queue_.top()));
    queue_.pop();
    lock.unlock();
    try {
      next.task();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "event loop task failed: %s\n", e.what());
    }
    lock.lock();
  }
}

}  // namespace hybridedge
