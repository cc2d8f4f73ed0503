#pragma once

#include "dispatcher.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace mstudio {

struct ServerOptions {
  std::string address = "127.0.0.1";
  int ws_port = 8765;  // 0 picks an ephemeral port
  int tcp_port = -1;   // length-prefixed TCP endpoint; < 0 disables it
};

// WebSocket (/ws) and framed-TCP front end. One thread runs the sockets,
// another owns the Dispatcher and advances the simulation against the wall
// clock; the two only exchange queued commands and outgoing envelopes.
class Server {
 public:
  Server(Dispatcher dispatcher, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts both threads. Error(PortBusy) if a port is taken.
  void start();
  // Idempotent; safe from any thread.
  void stop();
  // Blocks until stop() has been called.
  void wait();

  std::uint16_t ws_port() const;
  std::uint16_t tcp_port() const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace mstudio
