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

#include "hybridedge/agent.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "hybridedge/net.hpp"

namespace hybridedge {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

AgentTransition unchanged(AgentState state) { return {std::move(state), {}, {}}; }

}  // namespace

double Backoff::next() {
  const double out = std::min(next_ms_, policy_.cap_ms);
  next_ms_ = std::min(next_ms_ * policy_.multiplier, policy_.cap_ms);
  return out;
}

std::vector<std::string> AgentConfig::violations() const {
  std::vector<std::string> out;
  if (node_id.empty()) out.emplace_back("node_id is empty");
  if (max_concurrent_slots < 1) out.emplace_back("max_concurrent_slots must be >= 1");
  if (!(mem_capacity_mb > 0)) out.emplace_back("mem_capacity_mb must be > 0");
  if (cpu_cores < 1) out.emplace_back("cpu_cores must be >= 1");
  if (!(heartbeat_interval_ms > 0)) out.emplace_back("heartbeat_interval_ms must be > 0");
  if (!(time_scale > 0)) out.emplace_back("time_scale must be > 0");
  if (backend == BackendKind::Process && command_template.empty())
    out.emplace_back("process backend needs a command template");
  if (!(backoff.initial_ms > 0) || backoff.multiplier < 1 || backoff.cap_ms < backoff.initial_ms)
    out.emplace_back("invalid reconnect backoff");
  return out;
}

std::string attempt_ref(const std::string& instance_id, int attempt) {
  return fmt::format("{}#{}", instance_id, attempt);
}

std::string metrics_ref(const std::string& instance_id, int attempt) { return attempt_ref(instance_id, attempt); }

std::optional<AttemptRef> parse_attempt_ref(std::string_view ref) {
  const auto hash = ref.rfind('#');
  if (hash == std::string_view::npos || hash == 0 || hash + 1 == ref.size()) return std::nullopt;
  int attempt = 0;
  const auto digits = ref.substr(hash + 1);
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), attempt);
  if (ec != std::errc{} || end != digits.data() + digits.size() || attempt < 0) return std::nullopt;
  return AttemptRef{std::string(ref.substr(0, hash)), attempt};
}

AgentTransition handle_message(AgentState state, const Message& msg) {
  return std::visit(
      overloaded{
          [&](const LaunchMsg& m) -> AgentTransition {
            const auto& req = m.request;
            if (auto it = state.running.find(req.instance_id); it != state.running.end()) {
              // Redelivered launch of what already runs: acknowledge only.
              const auto ref = attempt_ref(req.instance_id, req.attempt);
              if (it->second.attempt == req.attempt) return {std::move(state), {AckMsg{ref}}, {}};
              return {std::move(state),
                      {make_error(ref, Errc::Busy,
                                  fmt::format("attempt {} still running", it->second.attempt))},
                      {}};
            }
            if (static_cast<int>(state.running.size()) >= state.max_slots) {
              auto detail = fmt::format("{}/{} slots in use", state.running.size(), state.max_slots);
              return {std::move(state),
                      {make_error(attempt_ref(req.instance_id, req.attempt), Errc::Busy, std::move(detail))},
                      {}};
            }
            state.running.emplace(req.instance_id, req);
            return {std::move(state), {AckMsg{attempt_ref(req.instance_id, req.attempt)}}, {StartExecution{req}}};
          },
          [&](const TerminateMsg& m) -> AgentTransition {
            if (state.running.erase(m.instance_id) == 0)
              return {std::move(state), {make_error(m.instance_id, Errc::NotFound, "not running")}, {}};
            return {std::move(state), {AckMsg{m.instance_id}}, {CancelExecution{m.instance_id}}};
          },
          [&](const AckMsg&) { return unchanged(std::move(state)); },
          [&](const ErrorMsg&) { return unchanged(std::move(state)); },
          [&](const auto& other) -> AgentTransition {
            return {std::move(state),
                    {make_error("", Errc::UnexpectedMessage,
                                fmt::format("{} is not sent to agents", message_type(Message{other})))},
                    {}};
          },
      },
      msg);
}

AgentTransition handle_decode_failure(AgentState state, const DecodeFailure& failure) {
  AgentTransition t{std::move(state), {failure.reply}, {}};
  if (failure.close_connection) t.commands.emplace_back(CloseConnection{});
  return t;
}

AgentTransition handle_completion(AgentState state, const ExecutionResult& result) {
  const auto& id = result.metrics.instance_id;
  auto it = state.running.find(id);
  if (it == state.running.end()) return unchanged(std::move(state));
  const int attempt = it->second.attempt;
  state.running.erase(it);
  return {std::move(state), {MetricsReportMsg{result.metrics, attempt}}, {}};
}

HeartbeatSnapshot make_snapshot(const AgentState& state, TimePoint now) {
  HeartbeatSnapshot s;
  s.node_id = state.node_id;
  for (const auto& [id, req] : state.running) {
    s.running_instances.insert(id);
    s.mem_allocated_mb += req.reserved_mem_mb;
    s.cpu_allocated_pct += req.reserved_cpu_pct;
  }
  s.sent_at = now;
  return s;
}

RegisterMsg make_register(const AgentState& state, const AgentConfig& config) {
  RegisterMsg m;
  m.node_id = state.node_id;
  m.mem_capacity_mb = config.mem_capacity_mb;
  m.cpu_cores = config.cpu_cores;
  for (const auto& [id, req] : state.running) m.running.push_back(id);
  return m;
}

AgentRuntime::AgentRuntime(EventLoop& loop, AgentConfig config, std::unique_ptr<Backend> backend)
    : loop_(loop), config_(std::move(config)), backend_(std::move(backend)) {
  state_.node_id = config_.node_id;
  state_.max_slots = config_.max_concurrent_slots;
}

AgentRuntime::~AgentRuntime() { *alive_ = false; }

void AgentRuntime::connect(Sender send) {
  if (stopped_) return;
  send_ = std::move(send);
  close_requested_ = false;
  const auto generation = ++generation_;
  this->send(make_register(state_, config_));
  for (const auto& [ref, report] : unacked_) this->send(report);
  this->send(HeartbeatMsg{make_snapshot(state_, loop_.now())});
  schedule_heartbeat(generation);
}

void AgentRuntime::disconnect() {
  ++generation_;
  send_ = nullptr;
}

void AgentRuntime::shutdown() {
  disconnect();
  stopped_ = true;
  for (const auto& [id, req] : state_.running) backend_->cancel(id);
  state_.running.clear();
}

void AgentRuntime::schedule_heartbeat(std::uint64_t generation) {
  loop_.post_after(from_ms(config_.heartbeat_interval_ms), [this, generation, alive = alive_] {
    if (!*alive || generation != generation_ || stopped_) return;
    send(HeartbeatMsg{make_snapshot(state_, loop_.now())});
    schedule_heartbeat(generation);
  });
}

void AgentRuntime::on_line(const std::string& line) {
  if (stopped_) return;
  auto msg = decode(line);
  if (!msg) {
    apply(handle_decode_failure(state_, msg.error()));
    return;
  }
  if (const auto* ack = std::get_if<AckMsg>(&*msg)) unacked_.erase(ack->ref);
  apply(handle_message(state_, *msg));
}

void AgentRuntime::send(const Message& msg) {
  if (send_) send_(encode(msg));
}

void AgentRuntime::apply(AgentTransition t) {
  state_ = std::move(t.state);
  for (const auto& out : t.outbound) {
    if (const auto* report = std::get_if<MetricsReportMsg>(&out))
      unacked_[metrics_ref(report->record.instance_id, report->attempt)] = *report;
    send(out);
  }
  for (auto& cmd : t.commands) {
    std::visit(overloaded{
                   [&](StartExecution& s) {
                     backend_->start(s.request, [this, alive = alive_](ExecutionResult r) {
                       if (!*alive || stopped_) return;
                       apply(handle_completion(state_, r));
                     });
                   },
                   [&](CancelExecution& c) { backend_->cancel(c.instance_id); },
                   [&](CloseConnection&) {
                     close_requested_ = true;
                     disconnect();
                   },
               },
               cmd);
  }
}

Expected<std::unique_ptr<Backend>> make_backend(const AgentConfig& config, EventLoop& loop) {
  ExecutionContext ctx{config.node_id, config.artifact_dir / config.node_id};
  if (config.backend == BackendKind::Process)
    return std::unique_ptr<Backend>(std::make_unique<ProcessBackend>(loop, config.command_template, ctx));
  auto registry = CalibrationRegistry::defaults();
  if (!config.calibration_file.empty()) {
    std::ifstream in(config.calibration_file);
    if (!in) return fail(Errc::IoError, config.calibration_file);
    std::stringstream buf;
    buf << in.rdbuf();
    auto loaded = CalibrationRegistry::from_json(buf.str(), registry);
    if (!loaded) return unexpected(loaded.error());
    registry = std::move(*loaded);
  }
  return std::unique_ptr<Backend>(std::make_unique<SimulatedBackend>(
      loop, std::make_shared<const CalibrationRegistry>(std::move(registry)), ctx, config.time_scale));
}

Expected<Ok> run_agent(const AgentConfig& config, std::stop_token stop) {
  if (auto v = config.violations(); !v.empty()) return fail(Errc::InvalidConfig, v.front());
  RealLoop loop;
  auto backend = make_backend(config, loop);
  if (!backend) return unexpected(backend.error());
  auto runtime = std::make_unique<AgentRuntime>(loop, config, std::move(*backend));
  Backoff backoff(config.backoff);

  auto sleep_for = [&stop](double ms) {
    std::mutex m;
    std::condition_variable_any cv;
    std::unique_lock lock(m);
    cv.wait_for(lock, stop, std::chrono::duration<double, std::milli>(ms), [] { return false; });
  };

  while (!stop.stop_requested()) {
    auto sock = LineSocket::connect(config.manager_host, config.manager_port);
    if (!sock) {
      sleep_for(backoff.next());
      continue;
    }
    backoff.reset();
    auto shared = std::make_shared<LineSocket>(std::move(*sock));
    std::stop_callback on_stop(stop, [shared] { shared->shutdown(); });
    loop.call([&] { runtime->connect([shared](const std::string& line) { shared->send_line(line); }); });
    while (auto line = shared->read_line()) {
      const bool close = loop.call([&] {
        runtime->on_line(*line);
        return runtime->close_requested();
      });
      if (close) break;
    }
    loop.call([&] { runtime->disconnect(); });
    shared->shutdown();
    if (!stop.stop_requested()) sleep_for(backoff.next());
  }
  loop.call([&] { runtime->shutdown(); });
  loop.call([&] { runtime.reset(); });
  loop.stop();
  return Ok{};
}

}  // namespace hybridedge
