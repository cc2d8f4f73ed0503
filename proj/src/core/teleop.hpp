#pragma once

#include "arm_model.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mstudio {

enum class TeleopMode { Joint, Cartesian };
enum class FaultKind { NearSingularity, JointLimit, CommandTimeout };

const char* to_string(TeleopMode m);
const char* to_string(FaultKind f);
std::optional<TeleopMode> teleop_mode_from_string(const std::string& s);
std::optional<FaultKind> fault_from_string(const std::string& s);

// Semantic axes an input axis can drive.
enum class AxisAction { JointVelocity, CartX, CartY, CartZ, CartRoll, CartPitch, CartYaw };
inline constexpr std::size_t kAxisActionCount = 7;

enum class ButtonAction {
  ModeToggle,
  SpeedUp,  // scale of the active mode
  SpeedDown,
  JointSpeedUp,
  JointSpeedDown,
  CartSpeedUp,
  CartSpeedDown,
  JointNext,
  JointPrev,
  FaultClear,
  InertiaToggle,
  GripperOpen,
  GripperClose,
  Preset,
};

struct Action {
  bool is_axis = false;
  AxisAction axis = AxisAction::JointVelocity;
  ButtonAction button = ButtonAction::ModeToggle;
  std::string preset;  // for ButtonAction::Preset

  bool operator==(const Action&) const = default;
};

// Parses the action vocabulary ("joint_velocity", "cart_x", ..., "mode_toggle",
// "preset:<name>"); std::nullopt for unknown words.
std::optional<Action> parse_action(const std::string& word);
std::string action_name(const Action& a);

// Input id (e.g. "left_y", "cross") to one or more semantic actions.
struct BindingMap {
  std::map<std::string, std::vector<Action>> bindings;

  const std::vector<Action>* find(const std::string& id) const;
};

BindingMap default_bindings();
BindingMap bindings_from_json(const nlohmann::json& j);
nlohmann::json bindings_to_json(const BindingMap& b);
BindingMap load_bindings(const std::string& path);

struct InputEvent {
  enum class Kind { AxisMove, ButtonPress, ButtonRelease };
  Kind kind = Kind::AxisMove;
  std::string id;
  double value = 0.0;  // axis value, clamped to [-1, 1]
  double t = 0.0;      // [s]

  bool operator==(const InputEvent&) const = default;
};

const char* to_string(InputEvent::Kind k);
InputEvent event_from_json(const nlohmann::json& j);
nlohmann::json event_to_json(const InputEvent& e);
// Event list file: {"version":1, "events":[...]} or a bare array.
std::vector<InputEvent> events_from_json(const nlohmann::json& j);
nlohmann::json events_to_json(const std::vector<InputEvent>& events);

struct TeleopConfig {
  double singularity_threshold = 1e-3;
  // Below this manipulability the Cartesian pseudo-inverse is damped,
  // increasingly so towards zero.
  double damping_zone = 0.05;
  double dls_damping = 0.05;
  double cart_linear_speed = 0.25;   // [m/s] at full stick and scale 1
  double cart_angular_speed = 0.8;   // [rad/s]
  double command_timeout = 2.0;      // [s]
  double speed_step = 0.1;
  double inertia_tau = 0.4;          // [s]
};

TeleopConfig teleop_config_from_json(const nlohmann::json& j);
nlohmann::json teleop_config_to_json(const TeleopConfig& c);

struct TeleopState {
  TeleopMode mode = TeleopMode::Joint;
  int joint_count = 0;
  int selected_joint = 0;
  double joint_speed_scale = 0.5;
  double cart_speed_scale = 0.5;
  bool inertia_enabled = false;
  double inertia_tau = 0.4;
  std::optional<FaultKind> fault;
  JointVector commanded_vel;  // after smoothing [rad/s]
  double gripper_cmd = 0.0;
  std::array<double, kAxisActionCount> axes{};  // latest value per semantic axis
  double last_event_t = 0.0;
  std::optional<std::string> pending_preset;  // consumed by the executor

  bool operator==(const TeleopState& o) const;
};

TeleopState make_teleop_state(const RobotModel& model, const TeleopConfig& cfg = {});

// Pure transition. Unknown ids leave the state untouched.
TeleopState process_input(const TeleopState& state, const InputEvent& event,
                          const BindingMap& bindings, const TeleopConfig& cfg = {});

struct ResolvedVelocity {
  JointVector velocity;
  std::optional<FaultKind> fault;
};

ResolvedVelocity resolve_velocity(const TeleopState& state, const RobotModel& model,
                                  const JointVector& q, const TeleopConfig& cfg = {});

JointVector apply_inertia(const JointVector& prev_vel, const JointVector& target_vel, double dt,
                          double tau, bool enabled);

// Raises CommandTimeout when no event arrived within the timeout while the
// commanded velocity is nonzero.
TeleopState check_timeout(const TeleopState& state, double now, const TeleopConfig& cfg = {});

struct MotionRequest {
  JointVector start;
  JointVector target;
  double duration = 1.0;  // [s]
};

// Duration = max_i |dq_i| / (0.5 vel_limit_i), at least 1 s.
MotionRequest goto_preset(const RobotModel& model, const JointVector& q, const std::string& name);

// Minimum-jerk blend s(u) = 10u^3 - 15u^4 + 6u^5 between start and target.
JointVector min_jerk_position(const MotionRequest& req, double t);
JointVector min_jerk_velocity(const MotionRequest& req, double t);

}  // namespace mstudio
