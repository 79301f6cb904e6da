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

// hybridedge: run a manager or an agent, drive the HTTP API, and run the
// bundled scenarios offline.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <httplib.h>

#include "hybridedge/agent.hpp"
#include "hybridedge/config.hpp"
#include "hybridedge/json_codec.hpp"
#include "hybridedge/metrics.hpp"
#include "hybridedge/scenario.hpp"
#include "hybridedge/server.hpp"

using namespace hybridedge;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

void wait_for_signal() {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

int report(const Error& e) {
  fmt::print(stderr, "error: {}\n", e.message());
  return 1;
}

struct ApiTarget {
  std::string host = "127.0.0.1";
  int port = 8470;
};

ApiTarget parse_api(const std::string& text, int default_port) {
  ApiTarget t;
  t.port = default_port;
  std::string s = text;
  if (auto p = s.find("://"); p != std::string::npos) s = s.substr(p + 3);
  if (auto slash = s.find('/'); slash != std::string::npos) s = s.substr(0, slash);
  if (auto colon = s.rfind(':'); colon != std::string::npos) {
    t.host = s.substr(0, colon);
    t.port = std::stoi(s.substr(colon + 1));
  } else if (!s.empty()) {
    t.host = s;
  }
  return t;
}

/// Performs one API call; prints the body on success, the error otherwise.
Expected<json> api_call(const std::string& api, int default_port, const std::string& method,
                        const std::string& path, const std::string& body = {}) {
  const auto target = parse_api(api, default_port);
  httplib::Client cli(target.host, target.port);
  cli.set_connection_timeout(5);
  cli.set_read_timeout(30);
  httplib::Result res = method == "POST" ? cli.Post(path, body, "application/json") : cli.Get(path);
  if (!res)
    return fail(Errc::IoError, fmt::format("{}:{}: {}", target.host, target.port, httplib::to_string(res.error())));
  json out;
  try {
    out = json::parse(res->body);
  } catch (const json::exception&) {
    return fail(Errc::ParseError, res->body);
  }
  if (res->status >= 300) {
    const auto& err = out.contains("error") ? out["error"] : out;
    return fail(Errc::IoError, fmt::format("HTTP {}: {}", res->status, err.dump()));
  }
  return out;
}

Expected<std::vector<MetricsRecord>> load_metrics_log(const std::string& path) {
  auto text = read_text_file(path);
  if (!text) return unexpected(text.error());
  auto log = MetricsLog::replay(*text);
  if (!log) return unexpected(log.error());
  return log->records();
}

/// A built-in scenario whose groups include both labels.
std::optional<Scenario> scenario_with_groups(const std::string& a, const std::string& b) {
  for (const auto& name : builtin_scenario_names()) {
    auto sc = builtin_scenario(name);
    if (sc && sc->groups.contains(a) && sc->groups.contains(b)) return *sc;
  }
  return std::nullopt;
}

Expected<Scenario> load_scenario(const std::string& name_or_file) {
  if (auto sc = builtin_scenario(name_or_file)) return sc;
  auto text = read_text_file(name_or_file);
  if (!text) return fail(Errc::InvalidScenario, "no built-in scenario or file named " + name_or_file);
  return parse_scenario(*text);
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybridedge: application-aware container/unikernel orchestration for edge clusters"};
  app.require_subcommand(1);
  std::optional<std::string> config_flag;
  app.add_option("--config", config_flag, "Configuration file (overrides $HYBRIDEDGE_CONFIG)");
  std::string api = "127.0.0.1:8470";

  auto load = [&]() { return resolve_app_config(config_flag); };
  int exit_code = 0;

  // cluster up | status
  auto* cluster = app.add_subcommand("cluster", "Run or inspect the manager");
  cluster->require_subcommand(1);
  auto* up = cluster->add_subcommand("up", "Start the manager and serve until interrupted");
  std::optional<std::string> up_host, up_metrics, up_placements;
  std::optional<int> up_agent_port, up_http_port;
  up->add_option("--host", up_host, "Listen address");
  up->add_option("--agent-port", up_agent_port, "Agent protocol port (default 8471)");
  up->add_option("--http-port", up_http_port, "HTTP API port (default 8470)");
  up->add_option("--metrics-log", up_metrics, "Append metrics records to this file");
  up->add_option("--placement-log", up_placements, "Append placement decisions to this file");
  int up_workers = 0;
  bool up_simulated = false;
  double up_scale = 1.0;
  up->add_option("--workers", up_workers, "Also run this many in-process agents (w1..wN)");
  up->add_flag("--simulated", up_simulated, "In-process agents use the simulated backend (the default)");
  up->add_option("--time-scale", up_scale, "Divide simulated durations of in-process agents by this factor");
  up->callback([&] {
    auto cfg = load();
    if (!cfg) {
      exit_code = report(cfg.error());
      return;
    }
    if (up_host) cfg->manager.host = *up_host;
    if (up_agent_port) cfg->manager.agent_port = *up_agent_port;
    if (up_http_port) cfg->manager.http_port = *up_http_port;
    if (up_metrics) cfg->manager.metrics_log = *up_metrics;
    if (up_placements) cfg->manager.placement_log = *up_placements;
    ManagerServer server(*cfg);
    if (auto ok = server.start(); !ok) {
      exit_code = report(ok.error());
      return;
    }
    fmt::print("manager listening: agents on {}:{}, HTTP on {}:{}\n", cfg->manager.host, server.agent_port(),
               cfg->manager.host, server.http_port());
    std::vector<std::jthread> workers;
    for (int i = 1; i <= up_workers; ++i) {
      AgentConfig a = cfg->agent;
      a.node_id = fmt::format("w{}", i);
      a.manager_host = "127.0.0.1";
      a.manager_port = server.agent_port();
      a.backend = BackendKind::Simulated;
      a.time_scale = up_scale;
      workers.emplace_back([a](std::stop_token st) {
        if (auto r = run_agent(a, st); !r) report(r.error());
      });
      fmt::print("in-process agent {} started\n", a.node_id);
    }
    std::fflush(stdout);
    wait_for_signal();
    for (auto& w : workers) w.request_stop();
    workers.clear();
    server.stop();
  });

  auto* status = cluster->add_subcommand("status", "Show nodes and cluster counters");
  status->add_option("--api", api, "Manager HTTP address");
  status->callback([&] {
    auto out = api_call(api, 8470, "GET", "/v1/nodes");
    if (!out) {
      exit_code = report(out.error());
      return;
    }
    fmt::print("{:<12} {:<10} {:>10} {:>10} {:>8}\n", "node", "health", "mem MB", "cpu %", "running");
    for (const auto& n : (*out)["nodes"]) {
      fmt::print("{:<12} {:<10} {:>10.1f} {:>10.1f} {:>8}\n", n["node_id"].get<std::string>(),
                 n["health"].get<std::string>(), n["mem_allocated_mb"].get<double>(),
                 n["cpu_allocated_pct"].get<double>(), n["running_instances"].size());
    }
    fmt::print("queue {}  orphans {}  migrations {}  records {}\n", (*out)["queue_length"].dump(),
               (*out)["orphans_emitted"].dump(), (*out)["migrations"].dump(), (*out)["metrics_records"].dump());
  });

  // node join
  auto* node = app.add_subcommand("node", "Run a worker agent");
  node->require_subcommand(1);
  auto* join = node->add_subcommand("join", "Connect to the manager and execute launches");
  std::optional<std::string> join_id, join_manager, join_backend, join_command, join_calibration, join_artifacts;
  std::optional<double> join_mem, join_scale;
  std::optional<int> join_cores, join_slots;
  join->add_option("--id", join_id, "Node id");
  join->add_option("--manager", join_manager, "Manager agent address host:port");
  join->add_option("--mem", join_mem, "Memory capacity in MB");
  join->add_option("--cores", join_cores, "CPU cores");
  join->add_option("--slots", join_slots, "Concurrent executions");
  join->add_option("--backend", join_backend, "simulated or process")->check(CLI::IsMember({"simulated", "process"}));
  join->add_option("--command", join_command, "Command template for the process backend");
  join->add_option("--calibration", join_calibration, "Calibration file for the simulated backend");
  join->add_option("--artifacts", join_artifacts, "Artifact directory");
  join->add_option("--time-scale", join_scale, "Divide simulated durations by this factor");
  join->callback([&] {
    auto cfg = load();
    if (!cfg) {
      exit_code = report(cfg.error());
      return;
    }
    auto& a = cfg->agent;
    if (join_id) a.node_id = *join_id;
    if (join_manager) {
      const auto t = parse_api(*join_manager, 8471);
      a.manager_host = t.host;
      a.manager_port = t.port;
    }
    if (join_mem) a.mem_capacity_mb = *join_mem;
    if (join_cores) a.cpu_cores = *join_cores;
    if (join_slots) a.max_concurrent_slots = *join_slots;
    if (join_backend) a.backend = *join_backend == "process" ? BackendKind::Process : BackendKind::Simulated;
    if (join_command) a.command_template = *join_command;
    if (join_calibration) a.calibration_file = *join_calibration;
    if (join_artifacts) a.artifact_dir = *join_artifacts;
    if (join_scale) a.time_scale = *join_scale;
    std::jthread agent([&](std::stop_token st) {
      if (auto r = run_agent(a, st); !r) {
        exit_code = report(r.error());
        g_interrupted = true;
      }
    });
    fmt::print("agent {} connecting to {}:{}\n", a.node_id, a.manager_host, a.manager_port);
    std::fflush(stdout);
    wait_for_signal();
    agent.request_stop();
  });

  // submit
  auto* submit = app.add_subcommand("submit", "Submit a workload");
  std::optional<std::string> sub_file, sub_id, sub_payload, sub_ref, sub_app, sub_runtime;
  std::optional<double> sub_mem, sub_cpu;
  int sub_instances = 1, sub_priority = 0;
  submit->add_option("--spec", sub_file, "Workload spec JSON file; flags override its fields");
  submit->add_option("--id", sub_id, "Workload id (default: <kind>-<epoch ms>)");
  submit->add_option("-k,--kind,--payload", sub_payload, "Payload kind: image, stream or a custom name");
  submit->add_option("-f,--file,--payload-ref", sub_ref, "Input data file; must be readable on the workers");
  submit->add_option("--app-class", sub_app, "FaceDetect, CarDetect, BodyDetect, ObjectDetect, StreamAggregate, ...");
  submit->add_option("--instances", sub_instances, "Instance count");
  submit->add_option("--priority", sub_priority, "Queue priority, higher first");
  submit->add_option("--est-mem", sub_mem, "Memory estimate per instance in MB");
  submit->add_option("--est-cpu", sub_cpu, "CPU estimate per instance in percent of one core");
  submit->add_option("--runtime", sub_runtime, "Pin a runtime flavor instead of classifying");
  submit->add_option("--api", api, "Manager HTTP address");
  submit->callback([&] {
    json body;
    if (sub_file) {
      auto text = read_text_file(*sub_file);
      if (!text) {
        exit_code = report(text.error());
        return;
      }
      try {
        body = json::parse(*text);
      } catch (const json::exception& e) {
        exit_code = report(Error{Errc::ParseError, e.what()});
        return;
      }
    } else {
      body = json::object();
    }
    if (sub_id) body["id"] = *sub_id;
    if (sub_payload) body["payload_kind"] = *sub_payload;
    if (!body.contains("payload_kind")) body["payload_kind"] = "Image";
    if (sub_ref) body["payload_ref"] = std::filesystem::absolute(*sub_ref).string();
    if (!body.contains("id")) {
      const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                          std::chrono::system_clock::now().time_since_epoch())
                          .count();
      body["id"] = fmt::format("{}-{}", body["payload_kind"].get<std::string>(), ms);
    }
    if (sub_app) body["app_class"] = *sub_app;
    if (!sub_file || sub_instances != 1) body["instances"] = sub_instances;
    if (!sub_file || sub_priority != 0) body["priority"] = sub_priority;
    if (sub_mem) body["est_mem_mb"] = *sub_mem;
    if (sub_cpu) body["est_cpu_pct"] = *sub_cpu;
    if (sub_runtime) {
      auto cfg = load();
      if (!cfg) {
        exit_code = report(cfg.error());
        return;
      }
      auto kind = cfg->registry.flavor_kind(*sub_runtime);
      if (!kind) {
        exit_code = report(Error{Errc::UnknownFlavor, *sub_runtime});
        return;
      }
      body["runtime_class"] = RuntimeClass{*kind, *sub_runtime};
    }
    auto out = api_call(api, 8470, "POST", "/v1/workloads", body.dump());
    if (!out) {
      exit_code = report(out.error());
      return;
    }
    if ((*out)["status"] == "queued") {
      fmt::print("queued at position {} ({})\n", (*out)["position"].dump(), (*out)["reason"].get<std::string>());
    } else {
      for (const auto& a : (*out)["decision"]["assignments"])
        fmt::print("{} -> {} [{}]\n", a["instance_id"].get<std::string>(), a["node_id"].get<std::string>(),
                   a["runtime_class"]["flavor"].get<std::string>());
    }
  });

  // workloads
  auto* workloads = app.add_subcommand("workloads", "Show workloads");
  std::optional<std::string> wl_id;
  workloads->add_option("id", wl_id, "One workload");
  workloads->add_option("--api", api, "Manager HTTP address");
  workloads->callback([&] {
    auto out = api_call(api, 8470, "GET", wl_id ? "/v1/workloads/" + *wl_id : "/v1/workloads");
    if (!out) {
      exit_code = report(out.error());
      return;
    }
    fmt::print("{}\n", out->dump(2));
  });

  // metrics
  auto* metrics = app.add_subcommand("metrics", "Summarize stored metrics");
  std::string metrics_filter;
  std::optional<std::string> metrics_log;
  metrics->add_option("--filter", metrics_filter, "key=value[,key=value] over workload_id, flavor, app_class, node, kind");
  metrics->add_option("--metrics-log", metrics_log, "Read a metrics log file instead of the API");
  metrics->add_option("--api", api, "Manager HTTP address");
  metrics->callback([&] {
    if (metrics_log) {
      auto filter = parse_filter(metrics_filter);
      auto records = load_metrics_log(*metrics_log);
      if (!filter || !records) {
        exit_code = report(!filter ? filter.error() : records.error());
        return;
      }
      fmt::print("{}", format_summary(summarize(*records, *filter)));
      return;
    }
    auto out = api_call(api, 8470, "GET", "/v1/metrics?filter=" + httplib::detail::encode_query_param(metrics_filter));
    if (!out) {
      exit_code = report(out.error());
      return;
    }
    fmt::print("{}\n", (*out)["summary"].dump(2));
  });

  // report compare
  auto* reportcmd = app.add_subcommand("report", "Comparison reports");
  reportcmd->require_subcommand(1);
  auto* cmp = reportcmd->add_subcommand("compare", "Compare two groups of metrics records (A vs B)");
  std::string cmp_a, cmp_b;
  std::optional<std::string> cmp_log;
  std::optional<std::uint64_t> cmp_seed;
  bool cmp_api = false, cmp_json = false;
  cmp->add_option("a,--a", cmp_a, "Group A: a built-in label or a metrics filter")->required();
  cmp->add_option("b,--b", cmp_b, "Group B: a built-in label or a metrics filter")->required();
  cmp->add_option("--metrics-log", cmp_log, "Compare records from a metrics log file");
  cmp->add_flag("--live", cmp_api, "Compare records held by a running manager");
  cmp->add_option("--api", api, "Manager HTTP address (with --live)");
  cmp->add_option("--seed", cmp_seed, "Seed for a built-in scenario run");
  cmp->add_flag("--json", cmp_json, "Print JSON");
  cmp->callback([&] {
    Expected<ComparisonReport> result = fail(Errc::EmptySet, "A");
    if (cmp_api) {
      auto out = api_call(api, 8470, "GET",
                          fmt::format("/v1/reports/compare?a={}&b={}", httplib::detail::encode_query_param(cmp_a),
                                      httplib::detail::encode_query_param(cmp_b)));
      if (!out) {
        exit_code = report(out.error());
        return;
      }
      fmt::print("{}\n", out->dump(2));
      return;
    }
    if (cmp_log) {
      auto records = load_metrics_log(*cmp_log);
      auto fa = parse_filter(cmp_a);
      auto fb = parse_filter(cmp_b);
      if (!records || !fa || !fb) {
        exit_code = report(!records ? records.error() : !fa ? fa.error() : fb.error());
        return;
      }
      std::vector<MetricsRecord> a, b;
      for (const auto& r : *records) {
        if (fa->matches(r)) a.push_back(r);
        if (fb->matches(r)) b.push_back(r);
      }
      result = compare(a, b, cmp_a, cmp_b);
    } else {
      auto sc = scenario_with_groups(cmp_a, cmp_b);
      if (!sc) {
        exit_code = report(Error{Errc::InvalidScenario,
                                 "no built-in scenario defines both groups; use --metrics-log or --live"});
        return;
      }
      auto run = run_scenario(*sc, {cmp_seed, {}});
      if (!run) {
        exit_code = report(run.error());
        return;
      }
      result = run->compare_groups(cmp_a, cmp_b, sc->groups);
    }
    if (!result) {
      exit_code = report(result.error());
      return;
    }
    if (cmp_json) {
      fmt::print("{}\n", report_to_json(*result).dump(2));
    } else {
      fmt::print("{}", format_report(*result));
    }
  });

  // rebalance
  auto* rebalance_cmd = app.add_subcommand("rebalance", "Even out instance counts across workers");
  rebalance_cmd->add_option("--api", api, "Manager HTTP address");
  rebalance_cmd->callback([&] {
    auto out = api_call(api, 8470, "POST", "/v1/rebalance");
    if (!out) {
      exit_code = report(out.error());
      return;
    }
    const auto& moves = (*out)["migrations"];
    for (const auto& m : moves)
      fmt::print("{}: {} -> {}\n", m["instance_id"].get<std::string>(), m["from"].get<std::string>(),
                 m["to"].get<std::string>());
    fmt::print("{} migrations\n", moves.size());
  });

  // scenario list | run
  auto* scenario = app.add_subcommand("scenario", "Deterministic in-process cluster runs");
  scenario->require_subcommand(1);
  auto* sc_list = scenario->add_subcommand("list", "List built-in scenarios");
  sc_list->callback([&] {
    for (const auto& name : builtin_scenario_names()) {
      auto sc = builtin_scenario(name);
      fmt::print("{:<24} {}\n", name, sc ? sc->description : sc.error().message());
    }
  });
  auto* sc_run = scenario->add_subcommand("run", "Run a scenario; exits 1 when an assertion fails");
  std::string sc_name;
  std::optional<std::uint64_t> sc_seed;
  std::optional<std::string> sc_workdir, sc_placements, sc_metrics;
  bool sc_json = false;
  sc_run->add_option("scenario", sc_name, "Built-in name or scenario file")->required();
  sc_run->add_option("--seed", sc_seed, "Override the scenario seed");
  sc_run->add_option("--workdir", sc_workdir, "Directory for inputs and artifacts");
  sc_run->add_option("--placement-log", sc_placements, "Write the placement log here");
  sc_run->add_option("--metrics-log", sc_metrics, "Write the metrics log here");
  sc_run->add_flag("--json", sc_json, "Print the JSON summary");
  sc_run->callback([&] {
    auto sc = load_scenario(sc_name);
    if (!sc) {
      exit_code = report(sc.error());
      return;
    }
    auto run = run_scenario(*sc, {sc_seed, sc_workdir.value_or("")});
    if (!run) {
      exit_code = report(run.error());
      return;
    }
    if (sc_placements) write_lines(*sc_placements, run->placement_lines);
    if (sc_metrics) write_lines(*sc_metrics, run->metrics_lines);
    fmt::print("{}", sc_json ? run->to_json().dump(2) + "\n" : run->to_text());
    if (!run->passed()) exit_code = 1;
  });

  // profiles list | validate
  auto* profiles = app.add_subcommand("profiles", "Calibration table");
  profiles->require_subcommand(1);
  auto* pr_list = profiles->add_subcommand("list", "Show every (flavor, app class) profile");
  pr_list->callback([&] {
    auto cfg = load();
    if (!cfg) {
      exit_code = report(cfg.error());
      return;
    }
    fmt::print("{:<12} {:<10} {:<16} {:>14} {:>14} {:>16} {:>8}  {}\n", "flavor", "kind", "app_class", "cpu %",
               "mem MB", "time ms", "boot", "calibration");
    for (const auto& [key, entry] : cfg->registry.entries()) {
      const auto& p = entry.profile;
      fmt::print("{:<12} {:<10} {:<16} {:>8.3f}+/-{:<5.3f} {:>8.1f}+/-{:<5.1f} {:>9.3f}+/-{:<6.3f} {:>8.0f}  {}\n",
                 key.first, to_string(*cfg->registry.flavor_kind(key.first)), to_string(key.second),
                 p.cpu_pct_mean, p.cpu_pct_spread, p.mem_mb_mean, p.mem_mb_spread, p.proc_time_ms_mean,
                 p.proc_time_ms_spread, p.boot_ms, to_string(entry.calibration));
    }
  });
  auto* pr_validate = profiles->add_subcommand("validate", "Check a calibration file (or the configured table)");
  std::optional<std::string> pr_file;
  pr_validate->add_option("file", pr_file, "Calibration document");
  pr_validate->callback([&] {
    auto cfg = load();
    if (!cfg) {
      exit_code = report(cfg.error());
      return;
    }
    CalibrationRegistry reg = cfg->registry;
    if (pr_file) {
      auto text = read_text_file(*pr_file);
      if (!text) {
        exit_code = report(text.error());
        return;
      }
      auto parsed = CalibrationRegistry::from_json(*text, CalibrationRegistry::defaults());
      if (!parsed) {
        exit_code = report(parsed.error());
        return;
      }
      reg = std::move(*parsed);
    }
    const auto problems = reg.validate();
    for (const auto& p : problems) fmt::print("{}\n", p);
    if (problems.empty()) fmt::print("ok: {} flavors, {} profiles\n", reg.flavors().size(), reg.entries().size());
    exit_code = problems.empty() ? 0 : 1;
  });

  CLI11_PARSE(app, argc, argv);
  return exit_code;
}
