#include "protocol.hpp"

#include "error.hpp"
#include "json_util.hpp"

namespace mstudio::protocol {

namespace {

using nlohmann::json;

template <typename T>
struct Tag {};

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw Error(ErrorCode::Validation, std::string(key) + ": expected a string");
  return j.at(key).get<std::string>();
}

std::uint64_t require_id(const json& j, const char* key, const char* type) {
  if (!j.contains(key) || !j.at(key).is_number_unsigned()) {
    throw Error(ErrorCode::Validation, std::string(type) + "." + key + ": expected a non-negative integer");
  }
  return j.at(key).get<std::uint64_t>();
}

// -- payload encoders --
json payload(const Hello& m) { return {{"client", m.client}, {"protocol_version", m.protocol_version}}; }
json payload(const PilotAcquire&) { return json::object(); }
json payload(const PilotRelease&) { return json::object(); }
json payload(const Input& m) { return {{"event", event_to_json(m.event)}}; }
json payload(const ModeSet& m) { return {{"mode", to_string(m.mode)}}; }
json payload(const PresetGoto& m) { return {{"name", m.name}}; }
json payload(const FaultClear&) { return json::object(); }
json payload(const SeqUpload& m) { return {{"sequence", sequence_to_json(m.sequence)}}; }
json payload(const SeqPlay& m) { return {{"seq_id", m.seq_id}, {"record_rate", m.record_rate}}; }
json payload(const SeqStop&) { return json::object(); }
json payload(const LogFetch& m) { return {{"log_id", m.log_id}}; }
json payload(const Analyze& m) {
  json j = {{"log_id", m.log_id}};
  if (m.impressions) j["impressions"] = *m.impressions;
  if (m.meaning) j["meaning"] = *m.meaning;
  if (!m.intended.empty()) j["intended"] = intended_to_json(m.intended);
  return j;
}
json payload(const ConfigGet&) { return json::object(); }

json payload(const Welcome& m) {
  return {{"protocol_version", m.protocol_version}, {"server", m.server}, {"session", m.session},
          {"model", m.model}, {"bindings", m.bindings}, {"snapshot_rate", m.snapshot_rate},
          {"fast", m.fast}};
}
json payload(const PilotGranted&) { return json::object(); }
json payload(const PilotDenied& m) { return {{"holder", m.holder}}; }
json payload(const PilotReleased&) { return json::object(); }
json payload(const Ack& m) { return {{"of", m.of}}; }
json payload(const NotPilot& m) { return {{"of", m.of}}; }
json payload(const Busy& m) { return {{"reason", m.reason}}; }
json payload(const ErrorReply& m) {
  json j = {{"reason", m.reason}};
  if (m.offending_seq) j["offending_seq"] = *m.offending_seq;
  return j;
}
json payload(const Snapshot& m) { return snapshot_to_json(m.state); }
json payload(const SeqUploaded& m) {
  return {{"seq_id", m.seq_id}, {"name", m.name}, {"duration", m.duration}};
}
json payload(const PlayStarted& m) { return {{"seq_id", m.seq_id}}; }
json payload(const PlayDone& m) {
  return {{"seq_id", m.seq_id}, {"log_id", m.log_id}, {"rows", m.rows}, {"stopped", m.stopped}};
}
json payload(const LogData& m) { return {{"log_id", m.log_id}, {"metadata", m.metadata}, {"csv", m.csv}}; }
json payload(const Report& m) { return {{"log_id", m.log_id}, {"report", m.report}, {"text", m.text}}; }
json payload(const Config& m) { return {{"config", m.config}}; }

// -- payload decoders --
Hello parse(Tag<Hello>, const json& j) {
  Hello m;
  m.client = j.value("client", std::string());
  m.protocol_version = j.value("protocol_version", kProtocolVersion);
  return m;
}
PilotAcquire parse(Tag<PilotAcquire>, const json&) { return {}; }
PilotRelease parse(Tag<PilotRelease>, const json&) { return {}; }
Input parse(Tag<Input>, const json& j) {
  if (!j.contains("event")) throw Error(ErrorCode::Validation, "input.event: missing");
  return {event_from_json(j.at("event"))};
}
ModeSet parse(Tag<ModeSet>, const json& j) {
  const auto mode = teleop_mode_from_string(json_util::require<std::string>(j, "mode", "mode_set"));
  if (!mode) throw Error(ErrorCode::Validation, "mode_set.mode: expected joint or cartesian");
  return {*mode};
}
PresetGoto parse(Tag<PresetGoto>, const json& j) {
  return {json_util::require<std::string>(j, "name", "preset_goto")};
}
FaultClear parse(Tag<FaultClear>, const json&) { return {}; }
SeqUpload parse(Tag<SeqUpload>, const json& j) {
  if (!j.contains("sequence")) throw Error(ErrorCode::Validation, "seq_upload.sequence: missing");
  return {sequence_from_json(j.at("sequence"))};
}
SeqPlay parse(Tag<SeqPlay>, const json& j) {
  SeqPlay m;
  m.seq_id = require_id(j, "seq_id", "seq_play");
  if (j.contains("record_rate")) m.record_rate = json_util::require<double>(j, "record_rate", "seq_play");
  if (!(m.record_rate > 0.0)) throw Error(ErrorCode::Validation, "seq_play.record_rate: must be positive");
  return m;
}
SeqStop parse(Tag<SeqStop>, const json&) { return {}; }
LogFetch parse(Tag<LogFetch>, const json& j) { return {require_id(j, "log_id", "log_fetch")}; }
Analyze parse(Tag<Analyze>, const json& j) {
  Analyze m;
  m.log_id = require_id(j, "log_id", "analyze");
  m.impressions = opt_string(j, "impressions");
  m.meaning = opt_string(j, "meaning");
  if (j.contains("intended")) m.intended = intended_from_json(j.at("intended"));
  return m;
}
ConfigGet parse(Tag<ConfigGet>, const json&) { return {}; }

Welcome parse(Tag<Welcome>, const json& j) {
  Welcome m;
  m.protocol_version = json_util::require<int>(j, "protocol_version", "hello");
  m.server = json_util::require<std::string>(j, "server", "hello");
  m.session = require_id(j, "session", "hello");
  m.model = j.value("model", json());
  m.bindings = j.value("bindings", json());
  m.snapshot_rate = json_util::require<double>(j, "snapshot_rate", "hello");
  m.fast = json_util::require<bool>(j, "fast", "hello");
  return m;
}
PilotGranted parse(Tag<PilotGranted>, const json&) { return {}; }
PilotDenied parse(Tag<PilotDenied>, const json& j) { return {require_id(j, "holder", "pilot_denied")}; }
PilotReleased parse(Tag<PilotReleased>, const json&) { return {}; }
Ack parse(Tag<Ack>, const json& j) { return {json_util::require<std::string>(j, "of", "ack")}; }
NotPilot parse(Tag<NotPilot>, const json& j) { return {json_util::require<std::string>(j, "of", "not_pilot")}; }
Busy parse(Tag<Busy>, const json& j) { return {json_util::require<std::string>(j, "reason", "busy")}; }
ErrorReply parse(Tag<ErrorReply>, const json& j) {
  ErrorReply m;
  m.reason = json_util::require<std::string>(j, "reason", "error");
  if (j.contains("offending_seq")) m.offending_seq = require_id(j, "offending_seq", "error");
  return m;
}
Snapshot parse(Tag<Snapshot>, const json& j) { return {snapshot_from_json(j)}; }
SeqUploaded parse(Tag<SeqUploaded>, const json& j) {
  return {require_id(j, "seq_id", "seq_uploaded"), json_util::require<std::string>(j, "name", "seq_uploaded"),
          json_util::require<double>(j, "duration", "seq_uploaded")};
}
PlayStarted parse(Tag<PlayStarted>, const json& j) { return {require_id(j, "seq_id", "play_started")}; }
PlayDone parse(Tag<PlayDone>, const json& j) {
  return {require_id(j, "seq_id", "play_done"), require_id(j, "log_id", "play_done"),
          require_id(j, "rows", "play_done"), json_util::require<bool>(j, "stopped", "play_done")};
}
LogData parse(Tag<LogData>, const json& j) {
  return {require_id(j, "log_id", "log"), j.value("metadata", json()),
          json_util::require<std::string>(j, "csv", "log")};
}
Report parse(Tag<Report>, const json& j) {
  return {require_id(j, "log_id", "report"), j.value("report", json()),
          json_util::require<std::string>(j, "text", "report")};
}
Config parse(Tag<Config>, const json& j) { return {j.value("config", json())}; }

template <typename Variant, std::size_t I = 0>
Variant parse_by_type(const std::string& type, const json& payload) {
  if constexpr (I == std::variant_size_v<Variant>) {
    throw Error(ErrorCode::Protocol, "unknown message type '" + type + "'");
  } else {
    using T = std::variant_alternative_t<I, Variant>;
    if (type == T::kType) {
      if (!payload.is_object()) throw Error(ErrorCode::Validation, type + ": payload must be an object");
      try {
        return parse(Tag<T>{}, payload);
      } catch (const json::exception& e) {
        throw Error(ErrorCode::Validation, type + ": " + e.what());
      }
    }
    return parse_by_type<Variant, I + 1>(type, payload);
  }
}

template <typename Variant, std::size_t I = 0>
bool has_type(const std::string& type) {
  if constexpr (I == std::variant_size_v<Variant>) {
    return false;
  } else {
    return type == std::variant_alternative_t<I, Variant>::kType || has_type<Variant, I + 1>(type);
  }
}

}  // namespace

std::string encode(const Envelope& env) {
  json j = {{"type", env.type}, {"seq", env.seq}, {"payload", env.payload}};
  if (env.reply_to) j["reply_to"] = *env.reply_to;
  return j.dump();
}

Envelope decode(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Protocol, std::string("malformed frame: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::Protocol, "frame must be a JSON object");
  Envelope env;
  if (!j.contains("type") || !j.at("type").is_string()) throw Error(ErrorCode::Protocol, "frame.type: missing");
  env.type = j.at("type").get<std::string>();
  if (!j.contains("seq") || !j.at("seq").is_number_unsigned()) {
    throw Error(ErrorCode::Protocol, "frame.seq: expected a non-negative integer");
  }
  env.seq = j.at("seq").get<std::uint64_t>();
  if (j.contains("reply_to")) {
    if (!j.at("reply_to").is_number_unsigned()) throw Error(ErrorCode::Protocol, "frame.reply_to: bad value");
    env.reply_to = j.at("reply_to").get<std::uint64_t>();
  }
  env.payload = j.value("payload", json::object());
  return env;
}

std::optional<std::uint64_t> salvage_seq(std::string_view text) {
  const json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_object() && j.contains("seq") && j.at("seq").is_number_unsigned()) {
    return j.at("seq").get<std::uint64_t>();
  }
  return std::nullopt;
}

const char* type_of(const ClientMessage& m) {
  return std::visit([](const auto& v) { return std::decay_t<decltype(v)>::kType; }, m);
}

const char* type_of(const ServerMessage& m) {
  return std::visit([](const auto& v) { return std::decay_t<decltype(v)>::kType; }, m);
}

Envelope to_envelope(const ClientMessage& m, std::uint64_t seq) {
  return std::visit([&](const auto& v) { return Envelope{type_of(m), seq, std::nullopt, payload(v)}; }, m);
}

Envelope to_envelope(const ServerMessage& m, std::uint64_t seq, std::optional<std::uint64_t> reply_to) {
  return std::visit([&](const auto& v) { return Envelope{type_of(m), seq, reply_to, payload(v)}; }, m);
}

ClientMessage parse_client(const Envelope& env) { return parse_by_type<ClientMessage>(env.type, env.payload); }

ServerMessage parse_server(const Envelope& env) { return parse_by_type<ServerMessage>(env.type, env.payload); }

bool is_client_type(const std::string& type) { return has_type<ClientMessage>(type); }
bool is_server_type(const std::string& type) { return has_type<ServerMessage>(type); }

bool requires_pilot(const ClientMessage& m) {
  return std::holds_alternative<Input>(m) || std::holds_alternative<ModeSet>(m) ||
         std::holds_alternative<PresetGoto>(m) || std::holds_alternative<FaultClear>(m) ||
         std::holds_alternative<SeqPlay>(m) || std::holds_alternative<SeqStop>(m);
}

}  // namespace mstudio::protocol
