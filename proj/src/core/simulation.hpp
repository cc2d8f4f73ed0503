#pragma once

#include "arm_model.hpp"
#include "sim_exec.hpp"
#include "teleop.hpp"
#include "timeline.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mstudio {

struct SimulationConfig {
  double dt = kDefaultDt;
  double record_rate = 100.0;
  TeleopConfig teleop;
  BindingMap bindings = default_bindings();
};

struct SimSetup {
  ControllerGains gains;
  SimulationConfig config;
};

// {"gains", "bindings", "teleop", "dt", "record_rate"}, all optional.
SimSetup sim_setup_from_json(const RobotModel& model, const nlohmann::json& j);
nlohmann::json sim_setup_to_json(const SimSetup& s);

struct StateSnapshot {
  double t = 0.0;
  JointVector q;
  JointVector qd;
  Pose ee_pose;
  SimMode mode = SimMode::Idle;
  std::optional<FaultKind> fault;
  double manipulability = 0.0;
  double gripper = 0.0;
  // Teleop indicators mirrored for clients.
  TeleopMode teleop_mode = TeleopMode::Joint;
  int selected_joint = 0;
  double joint_speed_scale = 0.0;
  double cart_speed_scale = 0.0;
  bool inertia_enabled = false;

  bool operator==(const StateSnapshot& o) const;
};

nlohmann::json snapshot_to_json(const StateSnapshot& s);
StateSnapshot snapshot_from_json(const nlohmann::json& j);

// The single owner of mutable simulation state: teleop, preset moves and
// sequence playback all advance through tick() on one fixed-step clock.
class Simulation {
 public:
  Simulation(RobotModel model, ControllerGains gains, SimulationConfig cfg = {});

  const RobotModel& model() const { return model_; }
  const ControllerGains& gains() const { return gains_; }
  const SimulationConfig& config() const { return cfg_; }
  const SimState& state() const { return state_; }
  const TeleopState& teleop() const { return teleop_; }
  bool playing() const { return playback_ != nullptr; }
  std::uint64_t ticks() const { return ticks_; }

  // Applies an input event at the current simulation time. Throws Busy
  // while a sequence plays.
  void input(InputEvent event);
  void set_mode(TeleopMode mode);
  // Throws UnknownPreset, Busy while playing.
  void goto_preset(const std::string& name);
  void clear_fault();

  // Throws Busy unless idle, ModelMismatch/Validation for a bad sequence.
  void start_playback(const Sequence& seq, double record_rate);
  // Returns the partial log of the interrupted playback, if any.
  std::optional<TrajectoryLog> stop_playback();

  // Advances one step; returns the log when a playback finishes.
  std::optional<TrajectoryLog> tick();
  // Starts and runs a playback to completion without pacing.
  TrajectoryLog run_playback(const Sequence& seq, double record_rate);

  StateSnapshot snapshot() const;

 private:
  void teleop_tick();

  RobotModel model_;
  ControllerGains gains_;
  SimulationConfig cfg_;
  SimState state_;
  TeleopState teleop_;
  std::unique_ptr<Playback> playback_;
  std::optional<MotionRequest> preset_move_;
  double preset_elapsed_ = 0.0;
  std::uint64_t ticks_ = 0;
};

// Deterministic teleop re-simulation: events fire at the first step whose
// time reaches their timestamp; recording continues `settle` seconds past
// the last event. Rows hold the teleop reference, actual q, qd and gripper.
TrajectoryLog replay_events(const RobotModel& model, const ControllerGains& gains,
                            const SimulationConfig& cfg, const std::vector<InputEvent>& events,
                            double settle = 1.0);

}  // namespace mstudio
