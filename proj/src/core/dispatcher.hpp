#pragma once

#include "moa_metrics.hpp"
#include "protocol.hpp"
#include "simulation.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string_view>
#include <vector>

namespace mstudio {

// Session ids start at 1; 0 addresses every connected session.
inline constexpr std::uint64_t kBroadcast = 0;

struct Outgoing {
  std::uint64_t session = kBroadcast;
  protocol::ServerMessage message;
  std::optional<std::uint64_t> reply_to;
};

struct DispatcherConfig {
  double snapshot_rate = 50.0;
  bool fast = false;
  MetricConfig metrics;
};

// Applies protocol commands to a Simulation. Not thread-safe: the server
// calls it only from the simulation thread, which gives a total order over
// commands from all sessions.
class Dispatcher {
 public:
  Dispatcher(Simulation sim, DispatcherConfig cfg = {});

  std::vector<Outgoing> connect(std::uint64_t session);
  std::vector<Outgoing> disconnect(std::uint64_t session);
  // Decodes one frame; malformed text yields an error reply to the sender.
  std::vector<Outgoing> handle_frame(std::uint64_t session, std::string_view text);
  std::vector<Outgoing> handle(std::uint64_t session, const protocol::Envelope& env);
  // Advances the simulation one step; emits play_done when a playback ends.
  std::vector<Outgoing> tick();

  protocol::Welcome welcome(std::uint64_t session) const;
  protocol::Snapshot snapshot() const { return {sim_.snapshot()}; }

  const Simulation& simulation() const { return sim_; }
  std::optional<std::uint64_t> pilot() const { return pilot_; }
  const TrajectoryLog* find_log(std::uint64_t id) const;

 private:
  std::vector<Outgoing> apply(std::uint64_t session, std::uint64_t seq, const protocol::ClientMessage& msg);
  std::uint64_t store_log(TrajectoryLog log);
  Outgoing finish_playback(TrajectoryLog log, bool stopped);

  Simulation sim_;
  DispatcherConfig cfg_;
  std::optional<std::uint64_t> pilot_;
  std::map<std::uint64_t, Sequence> sequences_;
  std::map<std::uint64_t, TrajectoryLog> logs_;
  std::uint64_t next_seq_id_ = 1;
  std::uint64_t next_log_id_ = 1;
  std::optional<std::uint64_t> playing_seq_id_;
};

}  // namespace mstudio
