#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "neurotouch/demo_session.hpp"

namespace neurotouch::demo {

struct ServerOptions {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 8765;  // 0 picks a free port
  int threads = 1;
  bool handle_signals = false;  // stop on SIGINT/SIGTERM
  DemoConfig demo;
};

/// WebSocket server. Each connection gets its own DemoSession, ticked in real time once per
/// batch window after the hello handshake. Plain HTTP requests get a short text reply.
class DemoServer {
 public:
  explicit DemoServer(ServerOptions options);
  ~DemoServer();
  DemoServer(const DemoServer&) = delete;
  DemoServer& operator=(const DemoServer&) = delete;

  /// Bound port, valid after construction.
  std::uint16_t port() const;
  /// Blocks until stop().
  void run();
  /// Thread-safe.
  void stop();
  std::size_t sessions_started() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace neurotouch::demo
