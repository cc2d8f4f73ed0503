#include "teleop.hpp"

#include "error.hpp"
#include "json_util.hpp"
#include "log.hpp"

#include <algorithm>
#include <cmath>

namespace mstudio {

namespace {

struct Word {
  const char* name;
  Action action;
};

Action axis(AxisAction a) {
  Action out;
  out.is_axis = true;
  out.axis = a;
  return out;
}

Action button(ButtonAction b) {
  Action out;
  out.button = b;
  return out;
}

const std::vector<Word>& vocabulary() {
  static const std::vector<Word> words = {
      {"joint_velocity", axis(AxisAction::JointVelocity)},
      {"cart_x", axis(AxisAction::CartX)},
      {"cart_y", axis(AxisAction::CartY)},
      {"cart_z", axis(AxisAction::CartZ)},
      {"cart_roll", axis(AxisAction::CartRoll)},
      {"cart_pitch", axis(AxisAction::CartPitch)},
      {"cart_yaw", axis(AxisAction::CartYaw)},
      {"mode_toggle", button(ButtonAction::ModeToggle)},
      {"speed_up", button(ButtonAction::SpeedUp)},
      {"speed_down", button(ButtonAction::SpeedDown)},
      {"joint_speed_up", button(ButtonAction::JointSpeedUp)},
      {"joint_speed_down", button(ButtonAction::JointSpeedDown)},
      {"cart_speed_up", button(ButtonAction::CartSpeedUp)},
      {"cart_speed_down", button(ButtonAction::CartSpeedDown)},
      {"joint_next", button(ButtonAction::JointNext)},
      {"joint_prev", button(ButtonAction::JointPrev)},
      {"fault_clear", button(ButtonAction::FaultClear)},
      {"inertia_toggle", button(ButtonAction::InertiaToggle)},
      {"gripper_open", button(ButtonAction::GripperOpen)},
      {"gripper_close", button(ButtonAction::GripperClose)},
  };
  return words;
}

constexpr const char* kPresetPrefix = "preset:";

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

const char* to_string(TeleopMode m) { return m == TeleopMode::Joint ? "joint" : "cartesian"; }

const char* to_string(FaultKind f) {
  switch (f) {
    case FaultKind::NearSingularity: return "near_singularity";
    case FaultKind::JointLimit: return "joint_limit";
    case FaultKind::CommandTimeout: return "command_timeout";
  }
  return "unknown";
}

std::optional<TeleopMode> teleop_mode_from_string(const std::string& s) {
  if (s == "joint") return TeleopMode::Joint;
  if (s == "cartesian") return TeleopMode::Cartesian;
  return std::nullopt;
}

std::optional<FaultKind> fault_from_string(const std::string& s) {
  for (auto f : {FaultKind::NearSingularity, FaultKind::JointLimit, FaultKind::CommandTimeout}) {
    if (s == to_string(f)) return f;
  }
  return std::nullopt;
}

const char* to_string(InputEvent::Kind k) {
  switch (k) {
    case InputEvent::Kind::AxisMove: return "axis";
    case InputEvent::Kind::ButtonPress: return "press";
    case InputEvent::Kind::ButtonRelease: return "release";
  }
  return "axis";
}

std::optional<Action> parse_action(const std::string& word) {
  if (word.rfind(kPresetPrefix, 0) == 0) {
    const std::string name = word.substr(std::char_traits<char>::length(kPresetPrefix));
    if (name.empty()) return std::nullopt;
    Action a = button(ButtonAction::Preset);
    a.preset = name;
    return a;
  }
  for (const auto& w : vocabulary()) {
    if (word == w.name) return w.action;
  }
  return std::nullopt;
}

std::string action_name(const Action& a) {
  if (!a.is_axis && a.button == ButtonAction::Preset) return kPresetPrefix + a.preset;
  for (const auto& w : vocabulary()) {
    if (w.action == a) return w.name;
  }
  return "?";
}

const std::vector<Action>* BindingMap::find(const std::string& id) const {
  const auto it = bindings.find(id);
  return it == bindings.end() ? nullptr : &it->second;
}

BindingMap default_bindings() {
  static const std::vector<std::pair<const char*, std::vector<const char*>>> table = {
      {"left_y", {"joint_velocity", "cart_x"}},
      {"left_x", {"cart_y"}},
      {"right_y", {"cart_z"}},
      {"right_x", {"cart_yaw"}},
      {"dpad_x", {"cart_roll"}},
      {"dpad_y", {"cart_pitch"}},
      {"options", {"mode_toggle"}},
      {"r1", {"speed_up"}},
      {"l1", {"speed_down"}},
      {"triangle", {"joint_next"}},
      {"square", {"joint_prev"}},
      {"share", {"fault_clear"}},
      {"touchpad", {"inertia_toggle"}},
      {"circle", {"gripper_open"}},
      {"cross", {"gripper_close"}},
      {"ps", {"preset:home"}},
  };
  BindingMap b;
  for (const auto& [id, words] : table) {
    for (const char* w : words) b.bindings[id].push_back(*parse_action(w));
  }
  return b;
}

BindingMap bindings_from_json(const nlohmann::json& j) {
  json_util::check_version(j, "binding map");
  BindingMap b;
  for (const auto& [id, value] : j.items()) {
    if (id == "version") continue;
    std::vector<std::string> words;
    if (value.is_string()) {
      words.push_back(value.get<std::string>());
    } else if (value.is_array() && std::all_of(value.begin(), value.end(),
                                               [](const auto& v) { return v.is_string(); })) {
      words = value.get<std::vector<std::string>>();
    } else {
      throw Error(ErrorCode::Validation, id + ": expected an action name or a list of them");
    }
    for (const auto& w : words) {
      auto a = parse_action(w);
      if (!a) throw Error(ErrorCode::Validation, id + ": unknown action '" + w + "'");
      b.bindings[id].push_back(*a);
    }
  }
  return b;
}

nlohmann::json bindings_to_json(const BindingMap& b) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [id, actions] : b.bindings) {
    if (actions.size() == 1) {
      j[id] = action_name(actions.front());
    } else {
      for (const auto& a : actions) j[id].push_back(action_name(a));
    }
  }
  return j;
}

BindingMap load_bindings(const std::string& path) {
  return bindings_from_json(json_util::read_file(path));
}

InputEvent event_from_json(const nlohmann::json& j) {
  InputEvent e;
  const auto kind = json_util::require<std::string>(j, "kind", "event");
  if (kind == "axis") {
    e.kind = InputEvent::Kind::AxisMove;
    const double v = json_util::require<double>(j, "value", "event");
    if (!std::isfinite(v)) throw Error(ErrorCode::Validation, "event.value: must be finite");
    e.value = std::clamp(v, -1.0, 1.0);
  } else if (kind == "press") {
    e.kind = InputEvent::Kind::ButtonPress;
  } else if (kind == "release") {
    e.kind = InputEvent::Kind::ButtonRelease;
  } else {
    throw Error(ErrorCode::Validation, "event.kind: expected axis, press or release");
  }
  e.id = json_util::require<std::string>(j, "id", "event");
  e.t = j.value("t", 0.0);
  if (!std::isfinite(e.t) || e.t < 0.0) {
    throw Error(ErrorCode::Validation, "event.t: must be a non-negative time");
  }
  return e;
}

nlohmann::json event_to_json(const InputEvent& e) {
  nlohmann::json j = {{"kind", to_string(e.kind)}, {"id", e.id}, {"t", e.t}};
  if (e.kind == InputEvent::Kind::AxisMove) j["value"] = e.value;
  return j;
}

std::vector<InputEvent> events_from_json(const nlohmann::json& j) {
  const nlohmann::json* list = &j;
  if (j.is_object()) {
    json_util::check_version(j, "event list");
    list = &json_util::require_array(j, "events", "");
  } else if (!j.is_array()) {
    throw Error(ErrorCode::Validation, "event list: expected an object or an array");
  }
  std::vector<InputEvent> out;
  double prev_t = 0.0;
  for (std::size_t i = 0; i < list->size(); ++i) {
    try {
      out.push_back(event_from_json((*list)[i]));
    } catch (const Error& e) {
      throw Error(e.code(), "events[" + std::to_string(i) + "]: " + e.what());
    }
    if (out.back().t < prev_t) {
      throw Error(ErrorCode::Validation,
                  "events[" + std::to_string(i) + "].t: timestamps must be non-decreasing");
    }
    prev_t = out.back().t;
  }
  return out;
}

nlohmann::json events_to_json(const std::vector<InputEvent>& events) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& e : events) list.push_back(event_to_json(e));
  return {{"version", 1}, {"events", list}};
}

TeleopConfig teleop_config_from_json(const nlohmann::json& j) {
  TeleopConfig c;
  c.singularity_threshold = j.value("singularity_threshold", c.singularity_threshold);
  c.damping_zone = j.value("damping_zone", c.damping_zone);
  c.dls_damping = j.value("dls_damping", c.dls_damping);
  c.cart_linear_speed = j.value("cart_linear_speed", c.cart_linear_speed);
  c.cart_angular_speed = j.value("cart_angular_speed", c.cart_angular_speed);
  c.command_timeout = j.value("command_timeout", c.command_timeout);
  c.speed_step = j.value("speed_step", c.speed_step);
  c.inertia_tau = j.value("inertia_tau", c.inertia_tau);
  if (!(c.inertia_tau > 0.0)) throw Error(ErrorCode::Validation, "inertia_tau must be positive");
  if (!(c.command_timeout > 0.0)) {
    throw Error(ErrorCode::Validation, "command_timeout must be positive");
  }
  return c;
}

nlohmann::json teleop_config_to_json(const TeleopConfig& c) {
  return {{"singularity_threshold", c.singularity_threshold},
          {"damping_zone", c.damping_zone},
          {"dls_damping", c.dls_damping},
          {"cart_linear_speed", c.cart_linear_speed},
          {"cart_angular_speed", c.cart_angular_speed},
          {"command_timeout", c.command_timeout},
          {"speed_step", c.speed_step},
          {"inertia_tau", c.inertia_tau}};
}

bool TeleopState::operator==(const TeleopState& o) const {
  return mode == o.mode && joint_count == o.joint_count && selected_joint == o.selected_joint &&
         joint_speed_scale == o.joint_speed_scale && cart_speed_scale == o.cart_speed_scale &&
         inertia_enabled == o.inertia_enabled && inertia_tau == o.inertia_tau && fault == o.fault &&
         commanded_vel.size() == o.commanded_vel.size() && commanded_vel == o.commanded_vel &&
         gripper_cmd == o.gripper_cmd && axes == o.axes && last_event_t == o.last_event_t &&
         pending_preset == o.pending_preset;
}

TeleopState make_teleop_state(const RobotModel& model, const TeleopConfig& cfg) {
  TeleopState s;
  s.joint_count = model.dof();
  s.commanded_vel = JointVector::Zero(model.dof());
  s.inertia_tau = cfg.inertia_tau;
  s.gripper_cmd = model.gripper_min;
  return s;
}

TeleopState process_input(const TeleopState& state, const InputEvent& event,
                          const BindingMap& bindings, const TeleopConfig& cfg) {
  const auto* actions = bindings.find(event.id);
  if (actions == nullptr) {
    log::warn("teleop: no binding for input '" + event.id + "', event ignored");
    return state;
  }
  TeleopState s = state;
  s.last_event_t = event.t;
  bool motion = false;
  for (const auto& a : *actions) {
    if (a.is_axis) {
      if (event.kind != InputEvent::Kind::AxisMove) continue;
      s.axes[static_cast<std::size_t>(a.axis)] = std::clamp(event.value, -1.0, 1.0);
      motion = true;
      continue;
    }
    if (event.kind != InputEvent::Kind::ButtonPress) continue;
    const double step = cfg.speed_step;
    switch (a.button) {
      case ButtonAction::ModeToggle:
        s.mode = s.mode == TeleopMode::Joint ? TeleopMode::Cartesian : TeleopMode::Joint;
        break;
      case ButtonAction::SpeedUp:
      case ButtonAction::SpeedDown: {
        const double delta = a.button == ButtonAction::SpeedUp ? step : -step;
        double& scale = s.mode == TeleopMode::Joint ? s.joint_speed_scale : s.cart_speed_scale;
        scale = clamp01(scale + delta);
        break;
      }
      case ButtonAction::JointSpeedUp: s.joint_speed_scale = clamp01(s.joint_speed_scale + step); break;
      case ButtonAction::JointSpeedDown: s.joint_speed_scale = clamp01(s.joint_speed_scale - step); break;
      case ButtonAction::CartSpeedUp: s.cart_speed_scale = clamp01(s.cart_speed_scale + step); break;
      case ButtonAction::CartSpeedDown: s.cart_speed_scale = clamp01(s.cart_speed_scale - step); break;
      case ButtonAction::JointNext:
        if (s.joint_count > 0) s.selected_joint = (s.selected_joint + 1) % s.joint_count;
        break;
      case ButtonAction::JointPrev:
        if (s.joint_count > 0) s.selected_joint = (s.selected_joint + s.joint_count - 1) % s.joint_count;
        break;
      case ButtonAction::FaultClear: s.fault.reset(); break;
      case ButtonAction::InertiaToggle: s.inertia_enabled = !s.inertia_enabled; break;
      case ButtonAction::GripperOpen: s.gripper_cmd = 1.0; break;
      case ButtonAction::GripperClose: s.gripper_cmd = 0.0; break;
      case ButtonAction::Preset:
        s.pending_preset = a.preset;
        motion = true;
        break;
    }
  }
  if (motion && s.fault) {
    s.commanded_vel.setZero();
    s.pending_preset.reset();
  }
  return s;
}

ResolvedVelocity resolve_velocity(const TeleopState& state, const RobotModel& model,
                                  const JointVector& q, const TeleopConfig& cfg) {
  ResolvedVelocity out{JointVector::Zero(model.dof()), std::nullopt};
  if (q.size() != model.dof()) {
    throw Error(ErrorCode::DimensionMismatch, "resolve_velocity: joint vector size");
  }
  if (state.fault) return out;
  auto axis_value = [&](AxisAction a) { return state.axes[static_cast<std::size_t>(a)]; };

  if (state.mode == TeleopMode::Joint) {
    const int j = state.selected_joint;
    if (j >= 0 && j < model.dof()) {
      out.velocity[j] = axis_value(AxisAction::JointVelocity) * state.joint_speed_scale *
                        model.joints[j].vel_limit;
    }
  } else {
    Eigen::Matrix<double, 6, 1> twist;
    const double lin = state.cart_speed_scale * cfg.cart_linear_speed;
    const double ang = state.cart_speed_scale * cfg.cart_angular_speed;
    twist << axis_value(AxisAction::CartX) * lin, axis_value(AxisAction::CartY) * lin,
        axis_value(AxisAction::CartZ) * lin, axis_value(AxisAction::CartRoll) * ang,
        axis_value(AxisAction::CartPitch) * ang, axis_value(AxisAction::CartYaw) * ang;
    const int rows = task_rows(model);
    const Eigen::VectorXd wanted = twist.head(rows);
    if (wanted.isZero(0.0)) return out;
    const double w = manipulability(model, q);
    if (w < cfg.singularity_threshold) {
      out.fault = FaultKind::NearSingularity;
      return out;
    }
    double lambda = 0.0;
    if (w < cfg.damping_zone) lambda = cfg.dls_damping * (1.0 - w / cfg.damping_zone);
    const Eigen::MatrixXd J = jacobian(model, q).topRows(rows);
    out.velocity = damped_solve(J, wanted, lambda);
  }

  // Uniform scaling keeps the Cartesian direction when a joint saturates.
  double scale = 1.0;
  for (int i = 0; i < model.dof(); ++i) {
    const double v = std::abs(out.velocity[i]);
    if (v > model.joints[i].vel_limit) scale = std::min(scale, model.joints[i].vel_limit / v);
  }
  out.velocity *= scale;
  return out;
}

JointVector apply_inertia(const JointVector& prev_vel, const JointVector& target_vel, double dt,
                          double tau, bool enabled) {
  if (!enabled) return target_vel;
  if (!(dt > 0.0) || !(tau > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "apply_inertia: dt and tau must be positive");
  }
  if (prev_vel.size() != target_vel.size()) {
    throw Error(ErrorCode::DimensionMismatch, "apply_inertia: vector sizes differ");
  }
  const double alpha = std::min(dt / tau, 1.0);
  return prev_vel + alpha * (target_vel - prev_vel);
}

TeleopState check_timeout(const TeleopState& state, double now, const TeleopConfig& cfg) {
  if (state.fault || state.commanded_vel.isZero(0.0)) return state;
  if (now - state.last_event_t <= cfg.command_timeout) return state;
  TeleopState s = state;
  s.fault = FaultKind::CommandTimeout;
  s.commanded_vel.setZero();
  return s;
}

MotionRequest goto_preset(const RobotModel& model, const JointVector& q, const std::string& name) {
  const auto it = model.presets.find(name);
  if (it == model.presets.end()) {
    throw Error(ErrorCode::UnknownPreset, "unknown preset '" + name + "'");
  }
  if (q.size() != model.dof()) throw Error(ErrorCode::DimensionMismatch, "goto_preset: joint vector size");
  MotionRequest req{q, it->second, 1.0};
  for (int i = 0; i < model.dof(); ++i) {
    const double dq = std::abs(req.target[i] - q[i]);
    req.duration = std::max(req.duration, dq / (0.5 * model.joints[i].vel_limit));
  }
  return req;
}

JointVector min_jerk_position(const MotionRequest& req, double t) {
  const double u = std::clamp(t / req.duration, 0.0, 1.0);
  const double s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  return req.start + s * (req.target - req.start);
}

JointVector min_jerk_velocity(const MotionRequest& req, double t) {
  if (t <= 0.0 || t >= req.duration) return JointVector::Zero(req.start.size());
  const double u = t / req.duration;
  const double ds = 30.0 * u * u * (1.0 - u) * (1.0 - u) / req.duration;
  return ds * (req.target - req.start);
}

}  // namespace mstudio
