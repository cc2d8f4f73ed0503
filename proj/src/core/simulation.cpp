#include "simulation.hpp"

#include "error.hpp"
#include "json_util.hpp"
#include "log.hpp"

#include <cmath>

namespace mstudio {

namespace {

std::vector<double> to_std(const JointVector& v) { return {v.data(), v.data() + v.size()}; }

JointVector from_std(const std::vector<double>& v) {
  return Eigen::Map<const JointVector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

SimMode sim_mode_from_string(const std::string& s) {
  for (auto m : {SimMode::Idle, SimMode::Teleop, SimMode::Playing}) {
    if (s == to_string(m)) return m;
  }
  throw Error(ErrorCode::Validation, "snapshot.mode: unknown value '" + s + "'");
}

}  // namespace

SimSetup sim_setup_from_json(const RobotModel& model, const nlohmann::json& j) {
  if (!j.is_null() && !j.is_object()) throw Error(ErrorCode::Validation, "sim config: expected an object");
  SimSetup s{ControllerGains::defaults(model), {}};
  if (j.is_null()) return s;
  json_util::check_version(j, "sim config");
  if (j.contains("gains")) s.gains = gains_from_json(j.at("gains"), model);
  if (j.contains("bindings")) s.config.bindings = bindings_from_json(j.at("bindings"));
  if (j.contains("teleop")) s.config.teleop = teleop_config_from_json(j.at("teleop"));
  if (j.contains("dt")) s.config.dt = json_util::require<double>(j, "dt", "sim config");
  if (j.contains("record_rate")) s.config.record_rate = json_util::require<double>(j, "record_rate", "sim config");
  validate(s.gains, model);
  if (!(s.config.dt > 0.0 && s.config.dt <= kMaxDt)) {
    throw Error(ErrorCode::Validation, "sim config.dt: must be in (0, 0.01] s");
  }
  if (!(s.config.record_rate > 0.0)) throw Error(ErrorCode::Validation, "sim config.record_rate: must be positive");
  return s;
}

nlohmann::json sim_setup_to_json(const SimSetup& s) {
  return {{"version", 1},
          {"gains", gains_to_json(s.gains)},
          {"bindings", bindings_to_json(s.config.bindings)},
          {"teleop", teleop_config_to_json(s.config.teleop)},
          {"dt", s.config.dt},
          {"record_rate", s.config.record_rate}};
}

bool StateSnapshot::operator==(const StateSnapshot& o) const {
  return t == o.t && q == o.q && qd == o.qd && ee_pose.position == o.ee_pose.position &&
         ee_pose.orientation.coeffs() == o.ee_pose.orientation.coeffs() && mode == o.mode &&
         fault == o.fault && manipulability == o.manipulability && gripper == o.gripper &&
         teleop_mode == o.teleop_mode && selected_joint == o.selected_joint &&
         joint_speed_scale == o.joint_speed_scale && cart_speed_scale == o.cart_speed_scale &&
         inertia_enabled == o.inertia_enabled;
}

nlohmann::json snapshot_to_json(const StateSnapshot& s) {
  const auto& p = s.ee_pose.position;
  const auto& r = s.ee_pose.orientation;
  return {{"t", s.t},
          {"q", to_std(s.q)},
          {"qd", to_std(s.qd)},
          {"ee_pose", {{"position", {p.x(), p.y(), p.z()}}, {"orientation", {r.w(), r.x(), r.y(), r.z()}}}},
          {"mode", to_string(s.mode)},
          {"fault", s.fault ? nlohmann::json(to_string(*s.fault)) : nlohmann::json(nullptr)},
          {"manipulability", s.manipulability},
          {"gripper", s.gripper},
          {"teleop",
           {{"mode", to_string(s.teleop_mode)},
            {"selected_joint", s.selected_joint},
            {"joint_speed_scale", s.joint_speed_scale},
            {"cart_speed_scale", s.cart_speed_scale},
            {"inertia_enabled", s.inertia_enabled}}}};
}

StateSnapshot snapshot_from_json(const nlohmann::json& j) {
  StateSnapshot s;
  s.t = json_util::require<double>(j, "t", "snapshot");
  s.q = from_std(json_util::require<std::vector<double>>(j, "q", "snapshot"));
  s.qd = from_std(json_util::require<std::vector<double>>(j, "qd", "snapshot"));
  if (s.q.size() != s.qd.size()) throw Error(ErrorCode::Validation, "snapshot: q and qd lengths differ");
  const auto& pose = j.at("ee_pose");
  const auto p = json_util::require<std::vector<double>>(pose, "position", "snapshot.ee_pose");
  const auto r = json_util::require<std::vector<double>>(pose, "orientation", "snapshot.ee_pose");
  if (p.size() != 3 || r.size() != 4) throw Error(ErrorCode::Validation, "snapshot.ee_pose: bad sizes");
  s.ee_pose.position = Eigen::Vector3d(p[0], p[1], p[2]);
  s.ee_pose.orientation = Eigen::Quaterniond(r[0], r[1], r[2], r[3]);
  s.mode = sim_mode_from_string(json_util::require<std::string>(j, "mode", "snapshot"));
  if (j.contains("fault") && !j.at("fault").is_null()) {
    const auto f = fault_from_string(j.at("fault").get<std::string>());
    if (!f) throw Error(ErrorCode::Validation, "snapshot.fault: unknown value");
    s.fault = f;
  }
  s.manipulability = json_util::require<double>(j, "manipulability", "snapshot");
  s.gripper = json_util::require<double>(j, "gripper", "snapshot");
  const auto& t = j.at("teleop");
  const auto mode = teleop_mode_from_string(json_util::require<std::string>(t, "mode", "snapshot.teleop"));
  if (!mode) throw Error(ErrorCode::Validation, "snapshot.teleop.mode: unknown value");
  s.teleop_mode = *mode;
  s.selected_joint = json_util::require<int>(t, "selected_joint", "snapshot.teleop");
  s.joint_speed_scale = json_util::require<double>(t, "joint_speed_scale", "snapshot.teleop");
  s.cart_speed_scale = json_util::require<double>(t, "cart_speed_scale", "snapshot.teleop");
  s.inertia_enabled = json_util::require<bool>(t, "inertia_enabled", "snapshot.teleop");
  return s;
}

Simulation::Simulation(RobotModel model, ControllerGains gains, SimulationConfig cfg)
    : model_(std::move(model)), gains_(std::move(gains)), cfg_(std::move(cfg)) {
  validate(model_);
  validate(gains_, model_);
  if (!(cfg_.dt > 0.0 && cfg_.dt <= kMaxDt)) {
    throw Error(ErrorCode::InvalidArgument, "simulation dt must be in (0, 0.01] s");
  }
  state_ = initial_state(model_);
  teleop_ = make_teleop_state(model_, cfg_.teleop);
}

void Simulation::input(InputEvent event) {
  if (playing()) throw Error(ErrorCode::Busy, "sequence playback in progress");
  event.t = state_.t;
  teleop_ = process_input(teleop_, event, cfg_.bindings, cfg_.teleop);
  if (!teleop_.fault) state_.fault.reset();
  if (teleop_.pending_preset) {
    const std::string name = *teleop_.pending_preset;
    teleop_.pending_preset.reset();
    try {
      goto_preset(name);
    } catch (const Error& e) {
      log::warn(std::string("teleop: ") + e.what());
    }
  }
}

void Simulation::set_mode(TeleopMode mode) { teleop_.mode = mode; }

void Simulation::goto_preset(const std::string& name) {
  if (playing()) throw Error(ErrorCode::Busy, "sequence playback in progress");
  if (teleop_.fault) throw Error(ErrorCode::Busy, std::string("fault active: ") + to_string(*teleop_.fault));
  preset_move_ = mstudio::goto_preset(model_, state_.q, name);
  preset_elapsed_ = 0.0;
  teleop_.commanded_vel.setZero();
}

void Simulation::clear_fault() {
  teleop_.fault.reset();
  state_.fault.reset();
}

void Simulation::start_playback(const Sequence& seq, double record_rate) {
  if (playing()) throw Error(ErrorCode::Busy, "a sequence is already playing");
  if (preset_move_) throw Error(ErrorCode::Busy, "preset motion in progress");
  if (state_.mode != SimMode::Idle || !teleop_.commanded_vel.isZero(0.0)) {
    throw Error(ErrorCode::Busy, "arm is moving under teleoperation");
  }
  playback_ = std::make_unique<Playback>(seq, model_, record_rate, cfg_.dt);
  teleop_.axes.fill(0.0);
  state_.mode = SimMode::Playing;
  state_.t_play = 0.0;
}

std::optional<TrajectoryLog> Simulation::stop_playback() {
  if (!playing()) return std::nullopt;
  TrajectoryLog log = playback_->take_log();
  playback_.reset();
  state_.mode = SimMode::Idle;
  state_.q_ref = state_.q;
  return log;
}

std::optional<TrajectoryLog> Simulation::tick() {
  ++ticks_;
  if (playback_) {
    playback_->tick(state_, model_, gains_);
    if (playback_->done()) {
      // The final row is recorded without stepping; keep the clock moving.
      state_.t += cfg_.dt;
      TrajectoryLog log = playback_->take_log();
      playback_.reset();
      state_.mode = SimMode::Idle;
      state_.q_ref = state_.q;
      return log;
    }
    return std::nullopt;
  }
  if (preset_move_) {
    preset_elapsed_ += cfg_.dt;
    const Reference ref{min_jerk_position(*preset_move_, preset_elapsed_),
                        min_jerk_velocity(*preset_move_, preset_elapsed_), teleop_.gripper_cmd};
    state_ = step(state_, model_, gains_, ref, cfg_.dt);
    state_.mode = SimMode::Teleop;
    state_.q_ref = ref.q;
    if (preset_elapsed_ >= preset_move_->duration) {
      preset_move_.reset();
      state_.mode = SimMode::Idle;
    }
    return std::nullopt;
  }
  teleop_tick();
  return std::nullopt;
}

void Simulation::teleop_tick() {
  teleop_ = check_timeout(teleop_, state_.t, cfg_.teleop);
  const ResolvedVelocity target = resolve_velocity(teleop_, model_, state_.q_ref, cfg_.teleop);
  if (target.fault) teleop_.fault = target.fault;
  if (teleop_.fault) {
    teleop_.commanded_vel.setZero();
  } else {
    teleop_.commanded_vel = apply_inertia(teleop_.commanded_vel, target.velocity, cfg_.dt,
                                          teleop_.inertia_tau, teleop_.inertia_enabled);
  }
  state_ = run_teleop_tick(state_, model_, gains_, teleop_, cfg_.dt);
  if (state_.fault && !teleop_.fault) {
    teleop_.fault = state_.fault;
    teleop_.commanded_vel.setZero();
  }
}

TrajectoryLog Simulation::run_playback(const Sequence& seq, double record_rate) {
  start_playback(seq, record_rate);
  while (true) {
    if (auto log = tick()) return std::move(*log);
  }
}

StateSnapshot Simulation::snapshot() const {
  StateSnapshot s;
  s.t = state_.t;
  s.q = state_.q;
  s.qd = state_.qd;
  s.ee_pose = forward_kinematics(model_, state_.q);
  s.mode = state_.mode;
  s.fault = teleop_.fault ? teleop_.fault : state_.fault;
  s.manipulability = manipulability(model_, state_.q);
  s.gripper = state_.gripper;
  s.teleop_mode = teleop_.mode;
  s.selected_joint = teleop_.selected_joint;
  s.joint_speed_scale = teleop_.joint_speed_scale;
  s.cart_speed_scale = teleop_.cart_speed_scale;
  s.inertia_enabled = teleop_.inertia_enabled;
  return s;
}

TrajectoryLog replay_events(const RobotModel& model, const ControllerGains& gains,
                            const SimulationConfig& cfg, const std::vector<InputEvent>& events,
                            double settle) {
  if (!(settle >= 0.0)) throw Error(ErrorCode::InvalidArgument, "replay: settle must be >= 0");
  Simulation sim(model, gains, cfg);
  const double per = 1.0 / (cfg.record_rate * cfg.dt);
  const long every = std::lround(per);
  if (every < 1 || std::abs(per - static_cast<double>(every)) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "replay: record period must be a whole number of steps");
  }
  const double end_t = (events.empty() ? 0.0 : events.back().t) + settle;
  const long records = static_cast<long>(std::ceil(end_t * cfg.record_rate - 1e-9));
  const long total = std::max(records, 0L) * every;

  TrajectoryLog log;
  log.rate = cfg.record_rate;
  log.sequence_name = "teleop-replay";
  log.model_name = model.name;
  std::size_t next = 0;
  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    while (next < events.size() && events[next].t <= t + 1e-12) {
      sim.input(events[next]);
      ++next;
    }
    if (k % every == 0) {
      const SimState& s = sim.state();
      log.rows.push_back({static_cast<double>(k / every) / cfg.record_rate, s.q_ref, s.q, s.qd, s.gripper});
    }
    if (k >= total) break;
    sim.tick();
  }
  return log;
}

}  // namespace mstudio
