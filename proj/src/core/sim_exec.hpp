#pragma once

#include "arm_model.hpp"
#include "teleop.hpp"
#include "timeline.hpp"
#include "trajectory_log.hpp"

#include <optional>

namespace mstudio {

struct ControllerGains {
  JointVector kp;            // [N m/rad]
  JointVector kd;            // [N m s/rad]
  JointVector torque_limit;  // [N m]

  // Per joint: kp = 100 inertia, kd = 20 inertia (critically damped at
  // 10 rad/s), torque_limit = 200 inertia.
  static ControllerGains defaults(const RobotModel& model);
};

void validate(const ControllerGains& gains, const RobotModel& model);
ControllerGains gains_from_json(const nlohmann::json& j, const RobotModel& model);
nlohmann::json gains_to_json(const ControllerGains& g);

enum class SimMode { Idle, Teleop, Playing };
const char* to_string(SimMode m);

struct SimState {
  double t = 0.0;
  JointVector q;
  JointVector qd;
  double gripper = 0.0;
  SimMode mode = SimMode::Idle;
  std::optional<FaultKind> fault;
  JointVector q_ref;   // teleop reference, integrated from commanded velocity
  double t_play = 0.0; // time into the active sequence

  bool operator==(const SimState& o) const;
};

// At rest at the model's home pose.
SimState initial_state(const RobotModel& model);

struct Reference {
  JointVector q;
  JointVector qd;
  double gripper = 0.0;
};

inline constexpr double kDefaultDt = 1e-3;
inline constexpr double kMaxDt = 0.01;
inline constexpr double kGripperRate = 2.0;  // [1/s]

// One semi-implicit Euler step of decoupled PD-driven joints.
SimState step(const SimState& state, const RobotModel& model, const ControllerGains& gains,
              const Reference& ref, double dt = kDefaultDt);

// Steps a sequence at a fixed internal dt, recording at `record_rate`.
class Playback {
 public:
  Playback(const Sequence& seq, const RobotModel& model, double record_rate, double dt = kDefaultDt);

  bool done() const { return recorded_final_; }
  // Records the current row when due, then advances one step unless done.
  void tick(SimState& state, const RobotModel& model, const ControllerGains& gains);
  Reference reference_at(double t) const;
  const TrajectoryLog& log() const { return log_; }
  TrajectoryLog take_log() { return std::move(log_); }
  const Sequence& sequence() const { return seq_; }

 private:
  Sequence seq_;
  int joints_;
  double dt_;
  long steps_per_record_;
  long total_steps_;
  long step_ = 0;
  bool recorded_final_ = false;
  TrajectoryLog log_;
};

// Requires state.mode == Idle; leaves it Idle at the final pose.
TrajectoryLog play_sequence(SimState& state, const RobotModel& model, const ControllerGains& gains,
                            const Sequence& seq, double record_rate = 100.0, double dt = kDefaultDt);

// Integrates the teleop velocity into q_ref, then steps. Pushing the
// reference into a joint limit pins it there and raises JointLimit.
SimState run_teleop_tick(const SimState& state, const RobotModel& model,
                         const ControllerGains& gains, const TeleopState& teleop, double dt = kDefaultDt);

}  // namespace mstudio
