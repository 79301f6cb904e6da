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

#include "hybridedge/server.hpp"

#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

#include <fmt/format.h>
#include <httplib.h>

#include "hybridedge/event_loop.hpp"
#include "hybridedge/json_codec.hpp"
#include "hybridedge/manager.hpp"
#include "hybridedge/net.hpp"

namespace hybridedge {

namespace {

int http_status(Errc code) {
  switch (code) {
    case Errc::DuplicateWorkloadId: return 409;
    case Errc::NotFound: return 404;
    case Errc::EmptySet: return 422;
    default: return 400;
  }
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

void reply_error(httplib::Response& res, const Error& e) {
  reply_json(res, http_status(e.code), {{"error", error_to_json(e)}});
}

}  // namespace

struct ManagerServer::Impl {
  AppConfig cfg;
  RealLoop loop;
  std::unique_ptr<Manager> manager;
  std::map<std::string, std::shared_ptr<LineSocket>> links;  // loop thread only
  std::optional<TcpListener> listener;
  httplib::Server http;
  int http_port = 0;
  std::ofstream placement_file;
  std::jthread accept_thread;
  std::jthread http_thread;
  std::mutex conn_mu;
  std::vector<std::shared_ptr<LineSocket>> conns;
  std::vector<std::jthread> conn_threads;
  bool started = false;
  bool stopped = false;

  explicit Impl(AppConfig c) : cfg(std::move(c)) {}

  void serve_connection(std::shared_ptr<LineSocket> sock) {
    std::string node;
    while (auto line = sock->read_line()) {
      auto msg = decode(*line);
      if (!msg) {
        sock->send_line(encode(msg.error().reply));
        if (msg.error().close_connection) break;
        continue;
      }
      if (const auto* reg = std::get_if<RegisterMsg>(&*msg)) node = reg->node_id;
      if (node.empty()) {
        sock->send_line(encode(make_error("", Errc::UnexpectedMessage, "send Register first")));
        continue;
      }
      const auto replies = loop.call([&] {
        if (std::holds_alternative<RegisterMsg>(*msg)) links[node] = sock;
        return manager->on_message(node, *msg);
      });
      for (const auto& r : replies) sock->send_line(encode(r));
    }
    sock->shutdown();
    if (!node.empty()) {
      loop.call([&] {
        if (auto it = links.find(node); it != links.end() && it->second == sock) links.erase(it);
      });
    }
  }

  void accept_loop() {
    while (auto sock = listener->accept()) {
      auto shared = std::make_shared<LineSocket>(std::move(*sock));
      std::lock_guard lock(conn_mu);
      if (stopped) break;
      conns.push_back(shared);
      conn_threads.emplace_back([this, shared] { serve_connection(shared); });
    }
  }

  void routes() {
    http.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
      reply_json(res, 200, {{"ok", true}});
    });

    http.Post("/v1/workloads", [this](const httplib::Request& req, httplib::Response& res) {
      WorkloadSpec spec;
      SubmitOptions opts;
      try {
        const auto body = json::parse(req.body);
        spec = body.get<WorkloadSpec>();
        if (auto it = body.find("runtime_class"); it != body.end()) opts.runtime_class = it->get<RuntimeClass>();
      } catch (const json::exception& e) {
        reply_error(res, Error{Errc::ParseError, e.what()});
        return;
      }
      auto out = loop.call([&] { return manager->submit(spec, opts); });
      if (!out) {
        reply_error(res, out.error());
        return;
      }
      if (const auto* d = std::get_if<PlacementDecision>(&*out)) {
        reply_json(res, 202, {{"status", "placed"}, {"decision", *d}});
      } else {
        const auto& q = std::get<Queued>(*out);
        reply_json(res, 202, {{"status", "queued"}, {"position", q.position}, {"reason", q.reason}});
      }
    });

    http.Get("/v1/workloads", [this](const httplib::Request&, httplib::Response& res) {
      reply_json(res, 200, loop.call([&] {
        json all = json::array();
        for (const auto& [id, w] : manager->workloads()) all.push_back(manager->workload_view(id));
        return all;
      }));
    });

    http.Get(R"(/v1/workloads/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      auto view = loop.call([&] { return manager->workload_view(id); });
      if (view.is_null()) {
        reply_error(res, Error{Errc::NotFound, id});
        return;
      }
      reply_json(res, 200, view);
    });

    http.Get("/v1/nodes", [this](const httplib::Request&, httplib::Response& res) {
      reply_json(res, 200, loop.call([&] { return manager->cluster_view(); }));
    });

    http.Get("/v1/placements", [this](const httplib::Request&, httplib::Response& res) {
      reply_json(res, 200, loop.call([&] { return json(manager->placement_log()); }));
    });

    http.Get("/v1/metrics", [this](const httplib::Request& req, httplib::Response& res) {
      auto filter = parse_filter(req.get_param_value("filter"));
      if (!filter) {
        reply_error(res, filter.error());
        return;
      }
      reply_json(res, 200, loop.call([&] {
        const auto records = manager->metrics().records();
        json matching = json::array();
        for (const auto& r : records)
          if (filter->matches(r)) matching.push_back(r);
        return json{{"summary", summary_to_json(summarize(records, *filter))}, {"records", matching}};
      }));
    });

    http.Get("/v1/reports/compare", [this](const httplib::Request& req, httplib::Response& res) {
      const auto a_text = req.get_param_value("a");
      const auto b_text = req.get_param_value("b");
      auto fa = parse_filter(a_text);
      auto fb = parse_filter(b_text);
      if (!fa || !fb) {
        reply_error(res, !fa ? fa.error() : fb.error());
        return;
      }
      auto report = loop.call([&] {
        std::vector<MetricsRecord> a, b;
        for (const auto& r : manager->metrics().records()) {
          if (fa->matches(r)) a.push_back(r);
          if (fb->matches(r)) b.push_back(r);
        }
        return compare(a, b, a_text, b_text);
      });
      if (!report) {
        reply_error(res, report.error());
        return;
      }
      reply_json(res, 200, report_to_json(*report));
    });

    http.Post("/v1/rebalance", [this](const httplib::Request&, httplib::Response& res) {
      auto moves = loop.call([&] { return manager->rebalance_now(); });
      json out = json::array();
      for (const auto& m : moves)
        out.push_back({{"instance_id", m.instance_id}, {"from", m.from_node}, {"to", m.to_node}});
      reply_json(res, 200, {{"migrations", out}});
    });
  }
};

ManagerServer::ManagerServer(AppConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}

ManagerServer::~ManagerServer() { stop(); }

int ManagerServer::agent_port() const { return impl_->listener ? impl_->listener->port() : 0; }
int ManagerServer::http_port() const { return impl_->http_port; }

Expected<Ok> ManagerServer::start() {
  auto& d = *impl_;
  if (d.started) return Ok{};

  auto listener = TcpListener::bind(d.cfg.manager.host, d.cfg.manager.agent_port);
  if (!listener) return unexpected(listener.error());
  d.listener.emplace(std::move(*listener));

  if (d.cfg.manager.http_port == 0) {
    d.http_port = d.http.bind_to_any_port(d.cfg.manager.host);
  } else {
    d.http_port = d.http.bind_to_port(d.cfg.manager.host, d.cfg.manager.http_port) ? d.cfg.manager.http_port : -1;
  }
  if (d.http_port < 0)
    return fail(Errc::IoError, fmt::format("cannot bind HTTP {}:{}", d.cfg.manager.host, d.cfg.manager.http_port));

  if (d.cfg.manager.placement_log) d.placement_file.open(*d.cfg.manager.placement_log, std::ios::app);

  ManagerOptions opts;
  opts.config = d.cfg.cluster;
  opts.rules = d.cfg.rules;
  opts.registry = std::make_shared<const CalibrationRegistry>(d.cfg.registry);
  opts.metrics_file = d.cfg.manager.metrics_log;
  if (d.placement_file.is_open()) {
    opts.placement_sink = [&d](const std::string& line) {
      d.placement_file << line << '\n';
      d.placement_file.flush();
    };
  }
  d.loop.call([&] {
    d.manager = std::make_unique<Manager>(std::move(opts), d.loop, [&d](const std::string& node, const Message& msg) {
      if (auto it = d.links.find(node); it != d.links.end()) it->second->send_line(encode(msg));
    });
    d.manager->start();
  });

  d.routes();
  d.accept_thread = std::jthread([&d] { d.accept_loop(); });
  d.http_thread = std::jthread([&d] { d.http.listen_after_bind(); });
  d.started = true;
  return Ok{};
}

void ManagerServer::stop() {
  auto& d = *impl_;
  if (!d.started || d.stopped) return;
  d.http.stop();
  if (d.http_thread.joinable()) d.http_thread.join();
  std::vector<std::jthread> threads;
  {
    std::lock_guard lock(d.conn_mu);
    d.stopped = true;
    d.listener->close();
    for (auto& c : d.conns) c->shutdown();
    threads.swap(d.conn_threads);
  }
  if (d.accept_thread.joinable()) d.accept_thread.join();
  threads.clear();  // joins
  d.loop.call([&] {
    d.manager->stop();
    d.links.clear();
  });
  d.loop.stop();
}

}  // namespace hybridedge
