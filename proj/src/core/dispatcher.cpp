#include "dispatcher.hpp"

#include "error.hpp"
#include "log.hpp"

namespace mstudio {

namespace pr = protocol;

namespace {

Outgoing reply(std::uint64_t session, std::uint64_t seq, pr::ServerMessage msg) {
  return {session, std::move(msg), seq};
}

}  // namespace

Dispatcher::Dispatcher(Simulation sim, DispatcherConfig cfg) : sim_(std::move(sim)), cfg_(std::move(cfg)) {
  if (!(cfg_.snapshot_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "snapshot rate must be positive");
}

pr::Welcome Dispatcher::welcome(std::uint64_t session) const {
  pr::Welcome w;
  w.session = session;
  w.model = model_to_json(sim_.model());
  w.bindings = bindings_to_json(sim_.config().bindings);
  w.snapshot_rate = cfg_.snapshot_rate;
  w.fast = cfg_.fast;
  return w;
}

std::vector<Outgoing> Dispatcher::connect(std::uint64_t session) {
  return {{session, welcome(session), std::nullopt}};
}

std::vector<Outgoing> Dispatcher::disconnect(std::uint64_t session) {
  if (pilot_ == session) pilot_.reset();
  return {};
}

std::vector<Outgoing> Dispatcher::handle_frame(std::uint64_t session, std::string_view text) {
  pr::Envelope env;
  try {
    env = pr::decode(text);
  } catch (const Error& e) {
    return {{session, pr::ErrorReply{e.what(), pr::salvage_seq(text)}, std::nullopt}};
  }
  return handle(session, env);
}

std::vector<Outgoing> Dispatcher::handle(std::uint64_t session, const pr::Envelope& env) {
  try {
    const pr::ClientMessage msg = pr::parse_client(env);
    if (pr::requires_pilot(msg) && pilot_ != session) {
      return {reply(session, env.seq, pr::NotPilot{env.type})};
    }
    return apply(session, env.seq, msg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Busy) return {reply(session, env.seq, pr::Busy{e.what()})};
    return {reply(session, env.seq, pr::ErrorReply{e.what(), env.seq})};
  }
}

std::vector<Outgoing> Dispatcher::apply(std::uint64_t session, std::uint64_t seq, const pr::ClientMessage& msg) {
  using namespace pr;
  if (std::holds_alternative<Hello>(msg)) {
    const auto& m = std::get<Hello>(msg);
    if (m.protocol_version != kProtocolVersion) {
      throw Error(ErrorCode::UnsupportedVersion,
                  "protocol_version " + std::to_string(m.protocol_version) + " not supported; server speaks " +
                      std::to_string(kProtocolVersion));
    }
    return {reply(session, seq, welcome(session))};
  }
  if (std::holds_alternative<PilotAcquire>(msg)) {
    if (pilot_ && *pilot_ != session) return {reply(session, seq, PilotDenied{*pilot_})};
    pilot_ = session;
    return {reply(session, seq, PilotGranted{})};
  }
  if (std::holds_alternative<PilotRelease>(msg)) {
    if (pilot_ != session) return {reply(session, seq, NotPilot{PilotRelease::kType})};
    pilot_.reset();
    return {reply(session, seq, PilotReleased{})};
  }
  if (std::holds_alternative<Input>(msg)) {
    sim_.input(std::get<Input>(msg).event);
    return {};
  }
  if (std::holds_alternative<ModeSet>(msg)) {
    sim_.set_mode(std::get<ModeSet>(msg).mode);
    return {reply(session, seq, Ack{ModeSet::kType})};
  }
  if (std::holds_alternative<PresetGoto>(msg)) {
    sim_.goto_preset(std::get<PresetGoto>(msg).name);
    return {reply(session, seq, Ack{PresetGoto::kType})};
  }
  if (std::holds_alternative<FaultClear>(msg)) {
    sim_.clear_fault();
    return {reply(session, seq, Ack{FaultClear::kType})};
  }
  if (std::holds_alternative<SeqUpload>(msg)) {
    const Sequence& s = std::get<SeqUpload>(msg).sequence;
    validate(s, sim_.model());
    const std::uint64_t id = next_seq_id_++;
    sequences_.emplace(id, s);
    return {reply(session, seq, SeqUploaded{id, s.name, s.duration()})};
  }
  if (std::holds_alternative<SeqPlay>(msg)) {
    const auto& m = std::get<SeqPlay>(msg);
    const auto it = sequences_.find(m.seq_id);
    if (it == sequences_.end()) {
      throw Error(ErrorCode::InvalidArgument, "seq_play: unknown seq_id " + std::to_string(m.seq_id));
    }
    sim_.start_playback(it->second, m.record_rate);
    playing_seq_id_ = m.seq_id;
    std::vector<Outgoing> out{reply(session, seq, PlayStarted{m.seq_id})};
    if (cfg_.fast) {
      while (true) {
        if (auto log = sim_.tick()) {
          out.push_back(finish_playback(std::move(*log), false));
          break;
        }
      }
    }
    return out;
  }
  if (std::holds_alternative<SeqStop>(msg)) {
    auto log = sim_.stop_playback();
    if (!log) return {reply(session, seq, Ack{SeqStop::kType})};
    return {finish_playback(std::move(*log), true)};
  }
  if (std::holds_alternative<LogFetch>(msg)) {
    const std::uint64_t id = std::get<LogFetch>(msg).log_id;
    const TrajectoryLog* log = find_log(id);
    if (!log) throw Error(ErrorCode::InvalidArgument, "log_fetch: unknown log_id " + std::to_string(id));
    return {reply(session, seq, LogData{id, log_metadata(*log), log_to_csv(*log)})};
  }
  if (std::holds_alternative<Analyze>(msg)) {
    const auto& m = std::get<Analyze>(msg);
    const TrajectoryLog* log = find_log(m.log_id);
    if (!log) throw Error(ErrorCode::InvalidArgument, "analyze: unknown log_id " + std::to_string(m.log_id));
    const MoaReport r = analyze_log(*log, sim_.model(), cfg_.metrics, m.impressions, m.meaning, m.intended);
    return {reply(session, seq, Report{m.log_id, report_to_json(r), report_to_text(r)})};
  }
  if (std::holds_alternative<ConfigGet>(msg)) {
    const auto& c = sim_.config();
    nlohmann::json j = {{"model", model_to_json(sim_.model())},
                        {"gains", gains_to_json(sim_.gains())},
                        {"bindings", bindings_to_json(c.bindings)},
                        {"teleop", teleop_config_to_json(c.teleop)},
                        {"metrics", metric_config_to_json(cfg_.metrics)},
                        {"dt", c.dt},
                        {"record_rate", c.record_rate},
                        {"snapshot_rate", cfg_.snapshot_rate},
                        {"fast", cfg_.fast}};
    return {reply(session, seq, Config{std::move(j)})};
  }
  throw Error(ErrorCode::Protocol, std::string("unhandled message type ") + type_of(msg));
}

std::vector<Outgoing> Dispatcher::tick() {
  if (auto log = sim_.tick()) return {finish_playback(std::move(*log), false)};
  return {};
}

std::uint64_t Dispatcher::store_log(TrajectoryLog log) {
  const std::uint64_t id = next_log_id_++;
  logs_.emplace(id, std::move(log));
  return id;
}

Outgoing Dispatcher::finish_playback(TrajectoryLog log, bool stopped) {
  const std::uint64_t rows = log.rows.size();
  const std::uint64_t seq_id = playing_seq_id_.value_or(0);
  playing_seq_id_.reset();
  const std::uint64_t log_id = store_log(std::move(log));
  return {kBroadcast, pr::PlayDone{seq_id, log_id, rows, stopped}, std::nullopt};
}

const TrajectoryLog* Dispatcher::find_log(std::uint64_t id) const {
  const auto it = logs_.find(id);
  return it == logs_.end() ? nullptr : &it->second;
}

}  // namespace mstudio
