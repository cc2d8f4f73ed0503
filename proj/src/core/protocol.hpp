#pragma once

#include "moa_metrics.hpp"
#include "simulation.hpp"
#include "teleop.hpp"
#include "timeline.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace mstudio::protocol {

inline constexpr int kProtocolVersion = 1;

// Wire frame: {"type": ..., "seq": n, "reply_to": m?, "payload": {...}}.
struct Envelope {
  std::string type;
  std::uint64_t seq = 0;
  std::optional<std::uint64_t> reply_to;
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const Envelope&) const = default;
};

std::string encode(const Envelope& env);
// Error(Protocol) for malformed text or a frame missing type/seq.
Envelope decode(std::string_view text);
// Best-effort seq extraction from a frame that failed to decode.
std::optional<std::uint64_t> salvage_seq(std::string_view text);

// ---- client -> server ----
struct Hello {
  static constexpr const char* kType = "hello";
  std::string client;
  int protocol_version = kProtocolVersion;
  bool operator==(const Hello&) const = default;
};
struct PilotAcquire {
  static constexpr const char* kType = "pilot_acquire";
  bool operator==(const PilotAcquire&) const = default;
};
struct PilotRelease {
  static constexpr const char* kType = "pilot_release";
  bool operator==(const PilotRelease&) const = default;
};
struct Input {
  static constexpr const char* kType = "input";
  InputEvent event;
  bool operator==(const Input&) const = default;
};
struct ModeSet {
  static constexpr const char* kType = "mode_set";
  TeleopMode mode = TeleopMode::Joint;
  bool operator==(const ModeSet&) const = default;
};
struct PresetGoto {
  static constexpr const char* kType = "preset_goto";
  std::string name;
  bool operator==(const PresetGoto&) const = default;
};
struct FaultClear {
  static constexpr const char* kType = "fault_clear";
  bool operator==(const FaultClear&) const = default;
};
struct SeqUpload {
  static constexpr const char* kType = "seq_upload";
  Sequence sequence;
  bool operator==(const SeqUpload&) const = default;
};
struct SeqPlay {
  static constexpr const char* kType = "seq_play";
  std::uint64_t seq_id = 0;
  double record_rate = 100.0;
  bool operator==(const SeqPlay&) const = default;
};
struct SeqStop {
  static constexpr const char* kType = "seq_stop";
  bool operator==(const SeqStop&) const = default;
};
struct LogFetch {
  static constexpr const char* kType = "log_fetch";
  std::uint64_t log_id = 0;
  bool operator==(const LogFetch&) const = default;
};
struct Analyze {
  static constexpr const char* kType = "analyze";
  std::uint64_t log_id = 0;
  std::optional<std::string> impressions;
  std::optional<std::string> meaning;
  IntendedTonalities intended;
  bool operator==(const Analyze&) const = default;
};
struct ConfigGet {
  static constexpr const char* kType = "config_get";
  bool operator==(const ConfigGet&) const = default;
};

using ClientMessage = std::variant<Hello, PilotAcquire, PilotRelease, Input, ModeSet, PresetGoto,
                                   FaultClear, SeqUpload, SeqPlay, SeqStop, LogFetch, Analyze, ConfigGet>;

// ---- server -> client ----
struct Welcome {
  static constexpr const char* kType = "hello";
  int protocol_version = kProtocolVersion;
  std::string server = "motion-studio";
  std::uint64_t session = 0;
  nlohmann::json model;
  nlohmann::json bindings;
  double snapshot_rate = 50.0;
  bool fast = false;
  bool operator==(const Welcome&) const = default;
};
struct PilotGranted {
  static constexpr const char* kType = "pilot_granted";
  bool operator==(const PilotGranted&) const = default;
};
struct PilotDenied {
  static constexpr const char* kType = "pilot_denied";
  std::uint64_t holder = 0;
  bool operator==(const PilotDenied&) const = default;
};
struct PilotReleased {
  static constexpr const char* kType = "pilot_released";
  bool operator==(const PilotReleased&) const = default;
};
struct Ack {
  static constexpr const char* kType = "ack";
  std::string of;
  bool operator==(const Ack&) const = default;
};
struct NotPilot {
  static constexpr const char* kType = "not_pilot";
  std::string of;
  bool operator==(const NotPilot&) const = default;
};
struct Busy {
  static constexpr const char* kType = "busy";
  std::string reason;
  bool operator==(const Busy&) const = default;
};
struct ErrorReply {
  static constexpr const char* kType = "error";
  std::string reason;
  std::optional<std::uint64_t> offending_seq;
  bool operator==(const ErrorReply&) const = default;
};
struct Snapshot {
  static constexpr const char* kType = "snapshot";
  StateSnapshot state;
  bool operator==(const Snapshot&) const = default;
};
struct SeqUploaded {
  static constexpr const char* kType = "seq_uploaded";
  std::uint64_t seq_id = 0;
  std::string name;
  double duration = 0.0;
  bool operator==(const SeqUploaded&) const = default;
};
struct PlayStarted {
  static constexpr const char* kType = "play_started";
  std::uint64_t seq_id = 0;
  bool operator==(const PlayStarted&) const = default;
};
struct PlayDone {
  static constexpr const char* kType = "play_done";
  std::uint64_t seq_id = 0;
  std::uint64_t log_id = 0;
  std::uint64_t rows = 0;
  bool stopped = false;
  bool operator==(const PlayDone&) const = default;
};
struct LogData {
  static constexpr const char* kType = "log";
  std::uint64_t log_id = 0;
  nlohmann::json metadata;
  std::string csv;
  bool operator==(const LogData&) const = default;
};
struct Report {
  static constexpr const char* kType = "report";
  std::uint64_t log_id = 0;
  nlohmann::json report;
  std::string text;
  bool operator==(const Report&) const = default;
};
struct Config {
  static constexpr const char* kType = "config";
  nlohmann::json config;
  bool operator==(const Config&) const = default;
};

using ServerMessage = std::variant<Welcome, PilotGranted, PilotDenied, PilotReleased, Ack, NotPilot,
                                   Busy, ErrorReply, Snapshot, SeqUploaded, PlayStarted, PlayDone,
                                   LogData, Report, Config>;

const char* type_of(const ClientMessage& m);
const char* type_of(const ServerMessage& m);

Envelope to_envelope(const ClientMessage& m, std::uint64_t seq);
Envelope to_envelope(const ServerMessage& m, std::uint64_t seq, std::optional<std::uint64_t> reply_to);

// Error(Protocol) for an unknown type, Error(Validation) for a bad payload.
ClientMessage parse_client(const Envelope& env);
ServerMessage parse_server(const Envelope& env);

bool is_client_type(const std::string& type);
bool is_server_type(const std::string& type);

// Messages that move the arm and therefore need the pilot role.
bool requires_pilot(const ClientMessage& m);

}  // namespace mstudio::protocol
