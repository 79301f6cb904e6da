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

#include "hybridedge/calibration.hpp"

#include <fmt/format.h>

#include "hybridedge/json_codec.hpp"

namespace hybridedge {

namespace {

constexpr double kContainerBootMs = 300;
constexpr double kUnikernelBootMs = 50;

// Range figures become midpoint +/- half-width.
constexpr std::pair<double, double> range(double lo, double hi) {
  return {(lo + hi) / 2.0, (hi - lo) / 2.0};
}

ResourceProfile make(std::pair<double, double> cpu, std::pair<double, double> mem,
                     std::pair<double, double> time_ms, double boot_ms) {
  return ResourceProfile{cpu.first, cpu.second, mem.first, mem.second,
                         time_ms.first, time_ms.second, boot_ms};
}

constexpr std::pair<double, double> exact(double v) { return {v, 0.0}; }

std::optional<Calibration> parse_calibration(std::string_view s) {
  for (auto c : {Calibration::Measured, Calibration::Partial, Calibration::Uncalibrated})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Calibration c) {
  switch (c) {
    case Calibration::Measured: return "measured";
    case Calibration::Partial: return "partial";
    case Calibration::Uncalibrated: return "uncalibrated";
  }
  return "unknown";
}

const std::vector<RuntimeClass>& default_flavors() {
  static const std::vector<RuntimeClass> all = {
      {RuntimeKind::Container, "docker"},   {RuntimeKind::Container, "podman"},
      {RuntimeKind::Container, "singularity"}, {RuntimeKind::Unikernel, "unikraft"},
      {RuntimeKind::Unikernel, "osv"},      {RuntimeKind::Unikernel, "nanos"}};
  return all;
}

CalibrationRegistry CalibrationRegistry::defaults() {
  CalibrationRegistry r;
  for (const auto& rc : default_flavors()) r.register_flavor(rc.flavor, rc.kind);

  const auto face = AppClass::of(AppKind::FaceDetect);
  const auto car = AppClass::of(AppKind::CarDetect);
  const auto body = AppClass::of(AppKind::BodyDetect);
  const auto object = AppClass::of(AppKind::ObjectDetect);
  const auto stream = AppClass::of(AppKind::StreamAggregate);

  // docker: the container reference flavor.
  const auto docker_stream = make(exact(0.29), exact(71), exact(1.7), kContainerBootMs);
  const auto docker_car = make(exact(26), range(90, 96), exact(120), kContainerBootMs);
  r.set("docker", stream, {docker_stream, Calibration::Measured, "data science: 0.29% CPU, 71 MB, 1.7 ms"});
  r.set("docker", car, {docker_car, Calibration::Measured, "car detection: 26% CPU, 90-96 MB, 0.12 s"});
  r.set("docker", face,
        {make(exact(26), range(90, 96), exact(200), kContainerBootMs), Calibration::Partial,
         "face detection: 90-96 MB, 0.2 s; CPU from car detection"});
  r.set("docker", body,
        {make(exact(26), range(80, 84), exact(400), kContainerBootMs), Calibration::Partial,
         "body detection: 80-84 MB, 0.4 s; CPU from car detection"});
  r.set("docker", object,
        {make(exact(26), exact(200), exact(1300), kContainerBootMs), Calibration::Partial,
         "object detection: 1.3 s; memory is the admission default, CPU from car detection"});

  for (const auto& app : {face, car, body, object, stream}) {
    const auto& ref = r.find("docker", app)->profile;
    r.set("podman", app, {ref, Calibration::Uncalibrated, "copy of docker"});
    if (app != stream) r.set("singularity", app, {ref, Calibration::Uncalibrated, "copy of docker"});
  }
  auto singularity_stream = docker_stream;
  singularity_stream.proc_time_ms_mean = 1.503;
  r.set("singularity", stream,
        {singularity_stream, Calibration::Partial, "data science: 1.503 ms; CPU and memory from docker"});

  // unikraft: the unikernel reference flavor.
  const auto unikraft_stream =
      make(range(0.17, 0.20), range(45, 48), range(2.0, 2.1), kUnikernelBootMs);
  r.set("unikraft", stream,
        {unikraft_stream, Calibration::Measured, "data science: 0.17-0.20% CPU, 45-48 MB, 2-2.1 ms"});
  r.set("osv", stream,
        {make(range(0.19, 0.26), exact(55), exact(2.5), kUnikernelBootMs), Calibration::Measured,
         "data science: 0.19-0.26% CPU, ~55 MB, ~2.5 ms"});
  r.set("nanos", stream,
        {make(range(0.19, 0.24), exact(50), range(2.0, 2.1), kUnikernelBootMs), Calibration::Partial,
         "data science: 0.19-0.24% CPU, ~50 MB; time from unikraft"});

  // Unikernels do not run the vision workloads; these entries only keep the
  // table total.
  for (const char* flavor : {"unikraft", "osv", "nanos"}) {
    for (const auto& app : {face, car, body, object}) {
      auto p = r.find("docker", app)->profile;
      p.boot_ms = kUnikernelBootMs;
      r.set(flavor, app, {p, Calibration::Uncalibrated, "copy of docker; unikernels do not run vision workloads"});
    }
  }

  r.set_reference("native", car, make(exact(25.03), exact(79), exact(120), 0));
  return r;
}

void CalibrationRegistry::register_flavor(const std::string& flavor, RuntimeKind kind) {
  flavors_[flavor] = kind;
}

void CalibrationRegistry::set(const std::string& flavor, const AppClass& app, ProfileEntry entry) {
  entries_[{flavor, app}] = std::move(entry);
}

void CalibrationRegistry::set_reference(const std::string& label, const AppClass& app,
                                        ResourceProfile profile) {
  references_[{label, app}] = profile;
}

std::optional<RuntimeKind> CalibrationRegistry::flavor_kind(std::string_view flavor) const {
  auto it = flavors_.find(flavor);
  if (it == flavors_.end()) return std::nullopt;
  return it->second;
}

const ProfileEntry* CalibrationRegistry::find(std::string_view flavor, const AppClass& app) const {
  auto it = entries_.find({std::string(flavor), app});
  return it == entries_.end() ? nullptr : &it->second;
}

const ResourceProfile* CalibrationRegistry::find_reference(std::string_view label,
                                                           const AppClass& app) const {
  auto it = references_.find({std::string(label), app});
  return it == references_.end() ? nullptr : &it->second;
}

std::vector<std::string> CalibrationRegistry::validate() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : entries_) {
    if (!has_flavor(key.first))
      out.push_back(fmt::format("profile {}/{}: flavor not registered", key.first, to_string(key.second)));
    for (const auto& v : entry.profile.violations())
      out.push_back(fmt::format("profile {}/{}: {}", key.first, to_string(key.second), v));
  }
  for (const auto& rc : default_flavors()) {
    if (!has_flavor(rc.flavor)) continue;
    for (const auto& app : builtin_app_classes()) {
      if (!find(rc.flavor, app))
        out.push_back(fmt::format("missing profile {}/{}", rc.flavor, to_string(app)));
    }
  }
  return out;
}

Expected<CalibrationRegistry> CalibrationRegistry::from_json(std::string_view document,
                                                             const CalibrationRegistry& base) {
  CalibrationRegistry r = base;
  try {
    const json doc = json::parse(document);
    if (auto it = doc.find("flavors"); it != doc.end()) {
      for (const auto& [flavor, kind_text] : it->items()) {
        auto kind = parse_runtime_kind(kind_text.get<std::string>());
        if (!kind) return fail(Errc::InvalidConfig, "flavor " + flavor + ": unknown kind");
        r.register_flavor(flavor, *kind);
      }
    }
    if (auto it = doc.find("profiles"); it != doc.end()) {
      for (const auto& [flavor, apps] : it->items()) {
        if (!r.has_flavor(flavor)) return fail(Errc::UnknownFlavor, flavor);
        for (const auto& [app_text, body] : apps.items()) {
          const AppClass app = parse_app_class(app_text);
          ProfileEntry entry;
          if (const auto* existing = r.find(flavor, app)) entry = *existing;
          body.get_to(entry.profile);
          entry.calibration = Calibration::Measured;
          if (auto c = body.find("calibration"); c != body.end()) {
            auto parsed = parse_calibration(c->get<std::string>());
            if (!parsed) return fail(Errc::InvalidConfig, "unknown calibration " + c->dump());
            entry.calibration = *parsed;
          }
          entry.note = body.value("note", std::string{});
          r.set(flavor, app, std::move(entry));
        }
      }
    }
    if (auto it = doc.find("reference"); it != doc.end()) {
      for (const auto& [label, apps] : it->items())
        for (const auto& [app_text, body] : apps.items())
          r.set_reference(label, parse_app_class(app_text), body.get<ResourceProfile>());
    }
  } catch (const json::exception& e) {
    return fail(Errc::ParseError, e.what());
  }
  if (auto problems = r.validate(); !problems.empty()) return fail(Errc::InvalidConfig, problems.front());
  return r;
}

std::string CalibrationRegistry::to_json() const {
  json doc;
  doc["flavors"] = json::object();
  for (const auto& [flavor, kind] : flavors_) doc["flavors"][flavor] = to_string(kind);
  doc["profiles"] = json::object();
  for (const auto& [key, entry] : entries_) {
    json body = entry.profile;
    body["calibration"] = to_string(entry.calibration);
    if (!entry.note.empty()) body["note"] = entry.note;
    doc["profiles"][key.first][to_string(key.second)] = body;
  }
  doc["reference"] = json::object();
  for (const auto& [key, profile] : references_) doc["reference"][key.first][to_string(key.second)] = profile;
  return doc.dump(2);
}

}  // namespace hybridedge
