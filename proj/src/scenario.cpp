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

#include "hybridedge/scenario.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include <fmt/format.h>

#include "hybridedge/agent.hpp"
#include "hybridedge/event_loop.hpp"
#include "hybridedge/json_codec.hpp"

namespace hybridedge {

namespace detail {
// Generated from scenarios/*.json at build time.
const std::map<std::string, std::string>& builtin_scenario_documents();
}  // namespace detail

namespace fs = std::filesystem;

namespace {

Expected<FaultKind> parse_fault_kind(const std::string& s) {
  if (s == "drop_heartbeats") return FaultKind::DropHeartbeats;
  if (s == "kill_agent") return FaultKind::KillAgent;
  return fail(Errc::InvalidScenario, "unknown fault " + s);
}

std::optional<Health> parse_health(std::string_view s) {
  for (Health h : {Health::Healthy, Health::Suspect, Health::Unhealthy})
    if (to_string(h) == s) return h;
  return std::nullopt;
}

std::string counts_text(const std::map<std::string, int>& m) {
  std::string out = "{";
  for (const auto& [k, v] : m) out += fmt::format("{}{}: {}", out.size() > 1 ? ", " : "", k, v);
  return out + "}";
}

/// The in-process cluster: one manager and one AgentRuntime per node, with
/// every message encoded, delayed by the link latency, and decoded.
class SimCluster {
 public:
  SimCluster(const Scenario& sc, std::uint64_t seed, const fs::path& workdir,
             std::shared_ptr<const CalibrationRegistry> registry, ClusterConfig config)
      : sc_(sc), workdir_(workdir), registry_(std::move(registry)) {
    config.rng_seed = seed;
    ManagerOptions opts;
    opts.config = config;
    opts.registry = registry_;
    opts.placement_sink = [this](const std::string& line) { placement_lines_.push_back(line); };
    manager_ = std::make_unique<Manager>(
        std::move(opts), loop_,
        [this](const std::string& node, const Message& msg) { to_agent(node, encode(msg)); });
  }

  ~SimCluster() {
    // Agents first: their backends hold callbacks into the loop.
    agents_.clear();
    graveyard_.clear();
  }

  SimLoop& loop() { return loop_; }
  Manager& manager() { return *manager_; }
  const std::vector<std::string>& placement_lines() const { return placement_lines_; }

  void join(const ScenarioNode& n) {
    AgentConfig cfg;
    cfg.node_id = n.id;
    cfg.mem_capacity_mb = n.mem_capacity_mb;
    cfg.cpu_cores = n.cpu_cores;
    cfg.max_concurrent_slots = n.slots;
    cfg.heartbeat_interval_ms = manager_->config().heartbeat_interval_ms;
    cfg.artifact_dir = workdir_ / "artifacts";
    auto backend = std::make_unique<SimulatedBackend>(
        loop_, registry_, ExecutionContext{n.id, cfg.artifact_dir / n.id}, 1.0);
    auto& slot = agents_[n.id];
    if (slot) graveyard_.push_back(std::move(slot));
    slot = std::make_unique<AgentRuntime>(loop_, cfg, std::move(backend));
    const auto epoch = ++epochs_[n.id];
    slot->connect([this, node = n.id, epoch](const std::string& line) { to_manager(node, epoch, line); });
  }

  void kill(const std::string& node) {
    auto it = agents_.find(node);
    if (it == agents_.end() || !it->second) return;
    it->second->shutdown();
    ++epochs_[node];
    graveyard_.push_back(std::move(it->second));
    agents_.erase(it);
  }

  bool heartbeats_dropped(const std::string& node, double now_ms) const {
    for (const auto& f : sc_.faults) {
      if (f.kind != FaultKind::DropHeartbeats || f.node != node) continue;
      if (now_ms >= f.from_ms && (!f.to_ms || now_ms < *f.to_ms)) return true;
    }
    return false;
  }

 private:
  Duration latency() const { return from_ms(sc_.link_latency_ms); }

  void to_agent(const std::string& node, std::string line) {
    const auto epoch = epochs_[node];
    loop_.post_after(latency(), [this, node, epoch, line = std::move(line)] {
      auto it = agents_.find(node);
      if (it == agents_.end() || !it->second || epochs_[node] != epoch) return;
      it->second->on_line(line);
    });
  }

  void to_manager(const std::string& node, std::uint64_t epoch, std::string line) {
    loop_.post_after(latency(), [this, node, epoch, line = std::move(line)] {
      if (epochs_[node] != epoch) return;
      auto msg = decode(line);
      if (!msg) {
        to_agent(node, encode(msg.error().reply));
        return;
      }
      if (std::holds_alternative<HeartbeatMsg>(*msg) && heartbeats_dropped(node, to_ms(loop_.now())))
        return;
      for (const auto& reply : manager_->on_message(node, *msg)) to_agent(node, encode(reply));
    });
  }

  const Scenario& sc_;
  fs::path workdir_;
  std::shared_ptr<const CalibrationRegistry> registry_;
  SimLoop loop_;
  std::unique_ptr<Manager> manager_;
  std::map<std::string, std::unique_ptr<AgentRuntime>> agents_;
  std::vector<std::unique_ptr<AgentRuntime>> graveyard_;
  std::map<std::string, std::uint64_t> epochs_;
  std::vector<std::string> placement_lines_;
};

AssertionResult check(const ScenarioAssertion& a, const ScenarioReport& r, const Scenario& sc) {
  AssertionResult out{a.type, false, {}};
  const auto& args = a.args;
  try {
    if (a.type == "mem-saving-within" || a.type == "time-delta-within" || a.type == "verdict-equals") {
      auto cmp = r.compare_groups(args.at("a").get<std::string>(), args.at("b").get<std::string>(), sc.groups);
      if (!cmp) {
        out.detail = cmp.error().message();
        return out;
      }
      if (a.type == "verdict-equals") {
        const auto want = args.at("expected").get<std::string>();
        out.passed = cmp->verdict == want;
        out.detail = fmt::format("verdict \"{}\", expected \"{}\"", cmp->verdict, want);
        return out;
      }
      const double got = a.type == "mem-saving-within" ? cmp->mem_saving_pct : cmp->proc_time_delta_ms;
      const double want = args.at("expected").get<double>();
      const double tol = args.at("tolerance").get<double>();
      out.passed = std::fabs(got - want) <= tol;
      out.detail = fmt::format("{:.4f}, expected {} +/- {}", got, want, tol);
      return out;
    }
    if (a.type == "placements-per-node") {
      std::map<std::string, int> got;
      const auto reason = args.value("reason", std::string{});
      for (const auto& n : sc.nodes) got[n.id] = 0;
      for (const auto& d : r.decisions) {
        if (!reason.empty() && to_string(d.reason) != reason) continue;
        for (const auto& asg : d.assignments) ++got[asg.node_id];
      }
      const auto want = args.at("expected").get<std::map<std::string, int>>();
      out.passed = got == want;
      out.detail = fmt::format("{}, expected {}", counts_text(got), counts_text(want));
      return out;
    }
    if (a.type == "active-per-node") {
      const auto got = r.final_counts();
      const auto want = args.at("expected").get<std::map<std::string, int>>();
      out.passed = got == want;
      out.detail = fmt::format("{}, expected {}", counts_text(got), counts_text(want));
      return out;
    }
    if (a.type == "migrations-count" || a.type == "orphans-count") {
      const auto got = a.type == "migrations-count" ? r.migrations : r.orphans;
      const auto want = args.at("expected").get<std::size_t>();
      out.passed = got == want;
      out.detail = fmt::format("{}, expected {}", got, want);
      return out;
    }
    if (a.type == "node-health") {
      const auto node = args.at("node").get<std::string>();
      const auto want = parse_health(args.at("expected").get<std::string>());
      if (!want) throw std::invalid_argument("unknown health");
      auto it = r.final_health.find(node);
      out.passed = it != r.final_health.end() && it->second == *want;
      out.detail = fmt::format("{} is {}, expected {}", node,
                               it == r.final_health.end() ? "absent" : to_string(it->second),
                               to_string(*want));
      return out;
    }
    if (a.type == "requeued-once") {
      // Every orphan is re-placed by exactly one failover decision.
      std::map<std::string, int> requeued;
      for (const auto& d : r.decisions)
        if (d.reason == PlacementReason::RequeueAfterFailure)
          for (const auto& asg : d.assignments) ++requeued[asg.instance_id];
      bool ok = requeued.size() == r.orphans && r.queue_length == 0;
      for (const auto& [id, n] : requeued) ok = ok && n == 1;
      out.passed = ok;
      out.detail = fmt::format("{} orphans, {} re-placed, queue {}", r.orphans, requeued.size(), r.queue_length);
      return out;
    }
    if (a.type == "all-completed") {
      std::size_t failed = 0;
      for (const auto& rec : r.records) failed += rec.outcome.success ? 0 : 1;
      out.passed = r.final_placement.empty() && r.queue_length == 0 && failed == 0 && r.submit_errors.empty();
      out.detail = fmt::format("{} records, {} failed, {} active, {} queued", r.records.size(), failed,
                               r.final_placement.size(), r.queue_length);
      return out;
    }
    out.detail = "unknown assertion type";
  } catch (const std::exception& e) {
    out.detail = fmt::format("bad assertion arguments: {}", e.what());
  }
  return out;
}

}  // namespace

Expected<Scenario> parse_scenario(std::string_view document) {
  Scenario sc;
  try {
    const auto doc = json::parse(document);
    sc.name = doc.at("name").get<std::string>();
    sc.description = doc.value("description", std::string{});
    sc.seed = doc.value("seed", sc.seed);
    sc.run_until_ms = doc.value("run_until_ms", sc.run_until_ms);
    sc.link_latency_ms = doc.value("link_latency_ms", sc.link_latency_ms);
    sc.cluster = doc.value("cluster", json::object());
    sc.calibration = doc.value("calibration", json::object());
    for (const auto& n : doc.at("nodes")) {
      ScenarioNode node;
      node.id = n.at("id").get<std::string>();
      node.mem_capacity_mb = n.value("mem_capacity_mb", node.mem_capacity_mb);
      node.cpu_cores = n.value("cpu_cores", node.cpu_cores);
      node.slots = n.value("slots", node.slots);
      node.join_at_ms = n.value("join_at_ms", node.join_at_ms);
      sc.nodes.push_back(std::move(node));
    }
    for (const auto& t : doc.value("trace", json::array())) {
      TraceEntry e;
      e.at_ms = t.value("at_ms", 0.0);
      e.spec = t.at("spec").get<WorkloadSpec>();
      if (auto it = t.find("runtime"); it != t.end()) e.runtime = it->get<RuntimeClass>();
      if (auto it = t.find("profile"); it != t.end()) e.profile = it->get<ResourceProfile>();
      sc.trace.push_back(std::move(e));
    }
    for (const auto& f : doc.value("faults", json::array())) {
      auto kind = parse_fault_kind(f.at("type").get<std::string>());
      if (!kind) return unexpected(kind.error());
      Fault fault{*kind, f.at("node").get<std::string>(), f.value("from_ms", 0.0), std::nullopt};
      if (auto it = f.find("to_ms"); it != f.end() && !it->is_null()) fault.to_ms = it->get<double>();
      sc.faults.push_back(std::move(fault));
    }
    for (const auto& a : doc.value("actions", json::array())) {
      ScenarioAction act{a.at("at_ms").get<double>(), a.at("type").get<std::string>()};
      if (act.type != "rebalance") return fail(Errc::InvalidScenario, "unknown action " + act.type);
      sc.actions.push_back(std::move(act));
    }
    sc.groups = doc.value("groups", std::map<std::string, std::string>{});
    for (const auto& a : doc.value("assertions", json::array()))
      sc.assertions.push_back({a.at("type").get<std::string>(), a});
  } catch (const json::exception& e) {
    return fail(Errc::InvalidScenario, e.what());
  }
  if (sc.nodes.empty()) return fail(Errc::InvalidScenario, "no nodes");
  std::set<std::string> ids;
  for (const auto& n : sc.nodes)
    if (!ids.insert(n.id).second) return fail(Errc::InvalidScenario, "duplicate node " + n.id);
  for (std::size_t i = 1; i < sc.trace.size(); ++i)
    if (sc.trace[i].at_ms < sc.trace[i - 1].at_ms)
      return fail(Errc::InvalidScenario, fmt::format("trace entry {} goes back in time", i));
  static const std::set<std::string> kAssertionTypes{
      "mem-saving-within", "time-delta-within", "verdict-equals", "placements-per-node", "active-per-node",
      "migrations-count",  "orphans-count",     "node-health",    "requeued-once",       "all-completed"};
  for (const auto& a : sc.assertions)
    if (!kAssertionTypes.contains(a.type)) return fail(Errc::InvalidScenario, "unknown assertion " + a.type);
  for (const auto& [label, filter] : sc.groups)
    if (auto f = parse_filter(filter); !f) return fail(Errc::InvalidScenario, label + ": " + f.error().message());
  return sc;
}

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> out;
  for (const auto& [name, doc] : detail::builtin_scenario_documents()) out.push_back(name);
  return out;
}

Expected<Scenario> builtin_scenario(std::string_view name) {
  const auto& docs = detail::builtin_scenario_documents();
  auto it = docs.find(std::string(name));
  if (it == docs.end()) return fail(Errc::InvalidScenario, fmt::format("no built-in scenario {}", name));
  return parse_scenario(it->second);
}

std::string synthetic_activity_csv(int users, int days) {
  std::string out = "Id,ActivityDate,TotalSteps,TotalDistance,Calories\n";
  for (int u = 0; u < users; ++u) {
    for (int d = 0; d < days; ++d) {
      const long steps = 4000 + 1500L * u + 113L * ((u * 7 + d * 3) % 11);
      out += fmt::format("{},4/{}/2016,{},{:.2f},{}\n", 1503960366L + 1000L * u, 12 + d, steps,
                         static_cast<double>(steps) * 0.00075, 1600 + 90 * u + 11 * d);
    }
  }
  return out;
}

bool ScenarioReport::passed() const {
  for (const auto& a : assertions)
    if (!a.passed) return false;
  return true;
}

std::map<std::string, int> ScenarioReport::final_counts() const {
  std::map<std::string, int> out;
  for (const auto& [node, health] : final_health) out[node] = 0;
  for (const auto& [id, node] : final_placement) ++out[node];
  return out;
}

Expected<ComparisonReport> ScenarioReport::compare_groups(
    const std::string& a, const std::string& b, const std::map<std::string, std::string>& groups) const {
  auto select = [&](const std::string& label) -> Expected<std::vector<MetricsRecord>> {
    auto it = groups.find(label);
    if (it == groups.end()) return fail(Errc::InvalidScenario, "unknown group " + label);
    auto f = parse_filter(it->second);
    if (!f) return unexpected(f.error());
    std::vector<MetricsRecord> out;
    for (const auto& r : records)
      if (f->matches(r)) out.push_back(r);
    return out;
  };
  auto ra = select(a);
  if (!ra) return unexpected(ra.error());
  auto rb = select(b);
  if (!rb) return unexpected(rb.error());
  return compare(*ra, *rb, a, b);
}

json ScenarioReport::to_json() const {
  json asserts = json::array();
  for (const auto& a : assertions)
    asserts.push_back({{"type", a.type}, {"passed", a.passed}, {"detail", a.detail}});
  json groups = json::object();
  for (const auto& [label, s] : group_summaries) {
    json g{{"count", s.count}, {"success", s.success_count}, {"failure", s.failure_count}};
    if (s.mem_peak_mb) g["mem_peak_mb_mean"] = s.mem_peak_mb->mean;
    if (s.cpu_avg_pct) g["cpu_avg_pct_mean"] = s.cpu_avg_pct->mean;
    if (s.proc_time_ms) g["proc_time_ms_mean"] = s.proc_time_ms->mean;
    groups[label] = std::move(g);
  }
  json health = json::object();
  for (const auto& [n, h] : final_health) health[n] = to_string(h);
  return {{"scenario", name},
          {"seed", seed},
          {"passed", passed()},
          {"assertions", asserts},
          {"submit_errors", submit_errors},
          {"groups", groups},
          {"final_placement", final_placement},
          {"final_counts", final_counts()},
          {"final_health", health},
          {"orphans", orphans},
          {"migrations", migrations},
          {"duplicate_reports", duplicate_reports},
          {"queue_length", queue_length},
          {"placements", placement_lines.size()},
          {"metrics_records", metrics_lines.size()}};
}

std::string ScenarioReport::to_text() const {
  std::string out = fmt::format("scenario {} (seed {})\n", name, seed);
  for (const auto& e : submit_errors) out += fmt::format("  submit error: {}\n", e);
  for (const auto& [label, s] : group_summaries) out += fmt::format("group {}: {}", label, format_summary(s));
  out += fmt::format("final placement {}\n", counts_text(final_counts()));
  out += fmt::format("orphans {}, migrations {}, queued {}\n", orphans, migrations, queue_length);
  for (const auto& a : assertions)
    out += fmt::format("{} {}: {}\n", a.passed ? "PASS" : "FAIL", a.type, a.detail);
  return out;
}

Expected<ScenarioReport> run_scenario(const Scenario& sc, const ScenarioRunOptions& options) {
  const std::uint64_t seed = options.seed.value_or(sc.seed);
  fs::path workdir = options.workdir;
  if (workdir.empty()) workdir = fs::temp_directory_path() / fmt::format("hybridedge-{}-{}", sc.name, seed);
  std::error_code ec;
  fs::create_directories(workdir / "inputs", ec);
  if (ec) return fail(Errc::IoError, workdir.string() + ": " + ec.message());

  const fs::path csv = workdir / "inputs" / "activity.csv";
  const fs::path image = workdir / "inputs" / "frame.jpg";
  {
    std::ofstream(csv, std::ios::trunc) << synthetic_activity_csv(6, 10);
    std::ofstream(image, std::ios::binary | std::ios::trunc) << std::string("\xFF\xD8\xFF\xE0synthetic\xFF\xD9");
  }

  auto registry = CalibrationRegistry::defaults();
  if (!sc.calibration.empty()) {
    auto merged = CalibrationRegistry::from_json(sc.calibration.dump(), registry);
    if (!merged) return unexpected(merged.error());
    registry = std::move(*merged);
  }
  ClusterConfig config;
  try {
    if (!sc.cluster.empty()) sc.cluster.get_to(config);
  } catch (const json::exception& e) {
    return fail(Errc::InvalidScenario, e.what());
  }
  if (auto v = config.violations(); !v.empty()) return fail(Errc::InvalidConfig, v.front());

  SimCluster cluster(sc, seed, workdir, std::make_shared<const CalibrationRegistry>(std::move(registry)),
                     config);
  auto& loop = cluster.loop();
  auto& manager = cluster.manager();
  ScenarioReport report;
  report.name = sc.name;
  report.seed = seed;

  manager.start();
  for (const auto& n : sc.nodes)
    loop.post_at(TimePoint{from_ms(n.join_at_ms)}, [&cluster, n] { cluster.join(n); });
  for (const auto& t : sc.trace) {
    loop.post_at(TimePoint{from_ms(t.at_ms)}, [&, t] {
      WorkloadSpec spec = t.spec;
      if (spec.payload_ref.empty()) {
        if (spec.payload.kind == PayloadKind::Stream) spec.payload_ref = csv.string();
        if (spec.payload.kind == PayloadKind::Image) spec.payload_ref = image.string();
      }
      auto r = manager.submit(spec, {t.runtime, t.profile});
      if (!r) report.submit_errors.push_back(fmt::format("{}: {}", spec.id, r.error().message()));
    });
  }
  for (const auto& f : sc.faults) {
    if (f.kind != FaultKind::KillAgent) continue;
    loop.post_at(TimePoint{from_ms(f.from_ms)}, [&cluster, node = f.node] { cluster.kill(node); });
    if (f.to_ms) {
      for (const auto& n : sc.nodes)
        if (n.id == f.node) loop.post_at(TimePoint{from_ms(*f.to_ms)}, [&cluster, n] { cluster.join(n); });
    }
  }
  for (const auto& a : sc.actions)
    loop.post_at(TimePoint{from_ms(a.at_ms)}, [&manager] { manager.rebalance_now(); });

  loop.run_until(TimePoint{from_ms(sc.run_until_ms)});
  manager.stop();

  report.placement_lines = cluster.placement_lines();
  report.metrics_lines = manager.metrics().lines();
  report.records = manager.metrics().records();
  report.decisions = manager.placement_log();
  report.final_placement = manager.active_placement();
  for (const auto& n : manager.nodes()) report.final_health[n.node_id] = n.health;
  report.orphans = manager.orphans_emitted();
  report.migrations = manager.migrations();
  report.duplicate_reports = manager.metrics().duplicates();
  report.queue_length = manager.queue_length();
  report.cluster = manager.cluster_view();
  for (const auto& [label, filter] : sc.groups) report.group_summaries[label] = summarize(report.records, *parse_filter(filter));
  for (const auto& a : sc.assertions) report.assertions.push_back(check(a, report, sc));
  return report;
}

}  // namespace hybridedge
