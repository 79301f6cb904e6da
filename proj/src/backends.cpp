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

#include "hybridedge/backends.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/resource.h>
#include <sys/wait.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include <fmt/format.h>

extern char** environ;

namespace hybridedge {

namespace fs = std::filesystem;

namespace {

// Portable across standard libraries: mt19937_64 output is specified, the
// distributions are not.
double symmetric_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
}

MetricsRecord base_record(const LaunchRequest& req, const ExecutionContext& ctx) {
  MetricsRecord m;
  m.instance_id = req.instance_id;
  m.workload_id = req.workload_id;
  m.node_id = ctx.node_id;
  m.runtime_class = req.runtime_class;
  m.app_class = req.app_class;
  return m;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t cluster_seed, std::string_view instance_id, int attempt) {
  return splitmix(cluster_seed ^ fnv1a(instance_id) ^ splitmix(static_cast<std::uint64_t>(attempt)));
}

Expected<std::vector<Artifact>> run_kernel(const LaunchRequest& req, const ExecutionContext& ctx) {
  std::vector<Artifact> artifacts;
  if (req.app_class.is_detection()) {
    auto tagged = image_tag(req.payload_ref, req.app_class, req.instance_id, ctx.artifact_dir);
    if (!tagged) return unexpected(tagged.error());
    artifacts.push_back(std::move(*tagged));
  } else if (req.app_class.kind == AppKind::StreamAggregate) {
    std::ifstream in(req.payload_ref, std::ios::binary);
    if (!in) return fail(Errc::UnreadablePayload, req.payload_ref);
    std::stringstream buf;
    buf << in.rdbuf();
    auto rows = parse_activity_csv(buf.str());
    if (!rows) return unexpected(rows.error());
    auto report = stream_aggregate(*rows);
    if (!report) return unexpected(report.error());
    std::error_code ec;
    fs::create_directories(ctx.artifact_dir, ec);
    Artifact a{fmt::format("aggregate_{}.csv", req.instance_id), {}};
    a.path = ctx.artifact_dir / a.name;
    std::ofstream out(a.path, std::ios::trunc);
    out << report_to_csv(*report);
    if (!out) return fail(Errc::IoError, a.path.string());
    artifacts.push_back(std::move(a));
  }
  return artifacts;
}

Expected<ExecutionResult> simulate_execution(const LaunchRequest& req,
                                             const CalibrationRegistry& registry, TimePoint start,
                                             const ExecutionContext& ctx) {
  ResourceProfile profile;
  if (req.profile_override) {
    profile = *req.profile_override;
  } else if (const auto* entry = registry.find(req.runtime_class.flavor, req.app_class)) {
    profile = entry->profile;
  } else {
    return fail(Errc::UnknownProfile,
                fmt::format("{}/{}", req.runtime_class.flavor, to_string(req.app_class)));
  }

  std::mt19937_64 gen(req.seed);
  auto draw = [&gen](double mean, double spread) {
    return std::max(0.0, mean + symmetric_unit(gen) * spread);
  };

  ExecutionResult result;
  auto& m = result.metrics;
  m = base_record(req, ctx);
  m.cpu_avg_pct = draw(profile.cpu_pct_mean, profile.cpu_pct_spread);
  m.mem_peak_mb = draw(profile.mem_mb_mean, profile.mem_mb_spread);
  m.proc_time_ms = draw(profile.proc_time_ms_mean, profile.proc_time_ms_spread);
  m.boot_ms = std::max(0.0, profile.boot_ms);
  m.started_at = start;
  m.finished_at = start + from_ms(m.boot_ms) + from_ms(m.proc_time_ms);

  auto artifacts = run_kernel(req, ctx);
  if (!artifacts) return fail(Errc::KernelFailure, artifacts.error().message());
  result.artifacts = std::move(*artifacts);
  m.outcome = Outcome::ok();
  return result;
}

std::vector<std::string> expand_command(const std::string& command_template, const LaunchRequest& req) {
  std::vector<std::string> argv;
  std::string cur;
  bool quoted = false, have = false;
  for (char c : command_template) {
    if (c == '"') {
      quoted = !quoted;
      have = true;
    } else if (!quoted && (c == ' ' || c == '\t')) {
      if (have) argv.push_back(std::move(cur));
      cur.clear();
      have = false;
    } else {
      cur.push_back(c);
      have = true;
    }
  }
  if (have) argv.push_back(std::move(cur));
  for (auto& arg : argv) {
    replace_all(arg, "{instance_id}", req.instance_id);
    replace_all(arg, "{workload_id}", req.workload_id);
    replace_all(arg, "{payload}", req.payload_ref);
    replace_all(arg, "{flavor}", req.runtime_class.flavor);
    replace_all(arg, "{kind}", to_string(req.runtime_class.kind));
    replace_all(arg, "{app_class}", to_string(req.app_class));
    replace_all(arg, "{attempt}", std::to_string(req.attempt));
  }
  return argv;
}

Expected<ExecutionResult> process_execution(const LaunchRequest& req,
                                            const std::string& command_template,
                                            const ExecutionContext& ctx,
                                            const ProcessOptions& options, std::stop_token stop) {
  const auto argv_s = expand_command(command_template, req);
  if (argv_s.empty()) return fail(Errc::SpawnFailure, "empty command");
  std::vector<char*> argv;
  for (const auto& a : argv_s) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  pid_t pid = 0;
  if (int rc = posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ); rc != 0)
    return fail(Errc::SpawnFailure, fmt::format("{}: {}", argv_s[0], std::strerror(rc)));

  int status = 0;
  rusage usage{};
  std::string failure;
  bool killed = false;
  for (;;) {
    const pid_t r = wait4(pid, &status, WNOHANG, &usage);
    if (r == pid) break;
    if (r < 0 && errno != EINTR) return fail(Errc::SpawnFailure, std::strerror(errno));
    if (!killed && stop.stop_requested()) {
      kill(pid, SIGKILL);
      failure = "Cancelled";
      killed = true;
    } else if (!killed && Clock::now() - t0 > options.timeout) {
      kill(pid, SIGKILL);
      failure = fmt::format("Timeout({})", options.timeout.count());
      killed = true;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  const auto t1 = Clock::now();

  ExecutionResult result;
  auto& m = result.metrics;
  m = base_record(req, ctx);
  const double wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  const double cpu_ms = usage.ru_utime.tv_sec * 1e3 + usage.ru_utime.tv_usec / 1e3 +
                        usage.ru_stime.tv_sec * 1e3 + usage.ru_stime.tv_usec / 1e3;
  m.proc_time_ms = std::max(wall_ms, 1e-3);
  m.cpu_avg_pct = wall_ms > 0 ? 100.0 * cpu_ms / wall_ms : 0;
  m.mem_peak_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;  // ru_maxrss is KiB on Linux
  m.boot_ms = 0;
  // Process runs are stamped on the loop clock by the agent; here only the
  // duration is known.
  m.started_at = TimePoint{0};
  m.finished_at = std::chrono::duration_cast<TimePoint>(t1 - t0);

  if (!failure.empty()) {
    m.outcome = Outcome::failure(failure);
  } else if (WIFEXITED(status) && WEXITSTATUS(status) == 0) {
    m.outcome = Outcome::ok();
  } else if (WIFEXITED(status)) {
    m.outcome = Outcome::failure(fmt::format("NonZeroExit({})", WEXITSTATUS(status)));
  } else {
    m.outcome = Outcome::failure(fmt::format("Signal({})", WIFSIGNALED(status) ? WTERMSIG(status) : -1));
  }
  return result;
}

SimulatedBackend::SimulatedBackend(EventLoop& loop,
                                   std::shared_ptr<const CalibrationRegistry> registry,
                                   ExecutionContext ctx, double time_scale)
    : loop_(loop), registry_(std::move(registry)), ctx_(std::move(ctx)), time_scale_(time_scale) {}

void SimulatedBackend::start(const LaunchRequest& req, Done done) {
  const std::uint64_t token = ++next_token_;
  active_[req.instance_id] = token;
  auto finish = [this, id = req.instance_id, token, done = std::move(done)](ExecutionResult r) {
    auto it = active_.find(id);
    if (it == active_.end() || it->second != token) return;
    active_.erase(it);
    done(std::move(r));
  };

  const TimePoint start = loop_.now();
  auto sim = simulate_execution(req, *registry_, start, ctx_);
  if (!sim) {
    ExecutionResult failed;
    failed.metrics = base_record(req, ctx_);
    failed.metrics.started_at = failed.metrics.finished_at = start;
    failed.metrics.outcome = Outcome::failure(sim.error().message());
    loop_.post([finish, failed = std::move(failed)]() mutable { finish(std::move(failed)); });
    return;
  }
  const auto elapsed = sim->metrics.finished_at - start;
  const auto wait = Duration(static_cast<std::int64_t>(static_cast<double>(elapsed.count()) / time_scale_));
  loop_.post_after(wait, [finish, r = std::move(*sim)]() mutable { finish(std::move(r)); });
}

void SimulatedBackend::cancel(const std::string& instance_id) { active_.erase(instance_id); }

ProcessBackend::ProcessBackend(EventLoop& loop, std::string command_template, ExecutionContext ctx,
                               ProcessOptions options)
    : loop_(loop), template_(std::move(command_template)), ctx_(std::move(ctx)), options_(options) {}

ProcessBackend::~ProcessBackend() {
  std::map<std::string, std::jthread> running;
  std::vector<std::jthread> finished;
  {
    std::lock_guard lock(mu_);
    running.swap(running_);
    finished.swap(finished_);
  }
  // jthread destructors request stop and join.
}

void ProcessBackend::start(const LaunchRequest& req, Done done) {
  std::lock_guard lock(mu_);
  finished_.clear();
  const TimePoint start = loop_.now();
  running_[req.instance_id] = std::jthread([this, req, start, done = std::move(done)](std::stop_token st) {
    auto res = process_execution(req, template_, ctx_, options_, st);
    ExecutionResult r;
    if (res) {
      r = std::move(*res);
      r.metrics.finished_at = start + (r.metrics.finished_at - r.metrics.started_at);
      r.metrics.started_at = start;
    } else {
      r.metrics = base_record(req, ctx_);
      r.metrics.started_at = r.metrics.finished_at = start;
      r.metrics.outcome = Outcome::failure(res.error().message());
    }
    if (r.metrics.outcome.success) {
      auto artifacts = run_kernel(req, ctx_);
      if (artifacts) {
        r.artifacts = std::move(*artifacts);
      } else {
        r.metrics.outcome = Outcome::failure(fmt::format("KernelFailure: {}", artifacts.error().message()));
      }
    }
    const bool cancelled = st.stop_requested();
    {
      std::lock_guard inner(mu_);
      auto it = running_.find(req.instance_id);
      if (it != running_.end() && it->second.get_id() == std::this_thread::get_id()) {
        finished_.push_back(std::move(it->second));
        running_.erase(it);
      }
    }
    if (!cancelled) loop_.post([done, r = std::move(r)]() mutable { done(std::move(r)); });
  });
}

void ProcessBackend::cancel(const std::string& instance_id) {
  std::lock_guard lock(mu_);
  auto it = running_.find(instance_id);
  if (it != running_.end()) it->second.request_stop();
}

}  // namespace hybridedge
