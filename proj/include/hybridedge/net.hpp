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

// Newline-framed TCP streams.

#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "hybridedge/expected.hpp"

namespace hybridedge {

class LineSocket {
 public:
  LineSocket() = default;
  explicit LineSocket(int fd) : fd_(fd) {}
  ~LineSocket();
  LineSocket(LineSocket&& other) noexcept;
  LineSocket& operator=(LineSocket&& other) noexcept;
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;

  static Expected<LineSocket> connect(const std::string& host, int port);

  bool valid() const { return fd_ >= 0; }
  /// Appends '\n'. Safe to call from several threads.
  bool send_line(const std::string& line);
  /// Blocks for the next line; nullopt on EOF or error.
  std::optional<std::string> read_line();
  /// Unblocks readers and fails further sends; the fd closes on destruction.
  void shutdown();

 private:
  int fd_ = -1;
  std::string buffer_;
  std::unique_ptr<std::mutex> write_mu_ = std::make_unique<std::mutex>();
};

class TcpListener {
 public:
  ~TcpListener();
  TcpListener(TcpListener&& other) noexcept;
  TcpListener(const TcpListener&) = delete;

  /// Port 0 picks an ephemeral port.
  static Expected<TcpListener> bind(const std::string& host, int port);

  int port() const { return port_; }
  /// nullopt once closed.
  std::optional<LineSocket> accept();
  void close();

 private:
  TcpListener(int fd, int port) : fd_(fd), port_(port) {}
  int fd_ = -1;
  int port_ = 0;
};

}  // namespace hybridedge
