#pragma once

#include "arm_model.hpp"
#include "trajectory_log.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mstudio {

enum class Interp { Step, Linear, CubicBezier };

const char* to_string(Interp i);
std::optional<Interp> interp_from_string(const std::string& s);

// Tangent handle as an offset from its key. The in-handle sits at
// (t - dt, v - dv), the out-handle at (t + dt, v + dv); dt >= 0 for both, so
// equal dv/dt on both sides gives a smooth key. When evaluating a segment,
// handles longer than the segment are cut to it, and a pair whose combined
// length exceeds the segment is shrunk proportionally; both keep their slope.
struct Handle {
  double dt = 0.0;
  double dv = 0.0;
  bool operator==(const Handle&) const = default;
};

struct Keyframe {
  double t = 0.0;
  double value = 0.0;
  Interp interp = Interp::Linear;  // governs the segment to the next key
  Handle h_in;
  Handle h_out;
  bool operator==(const Keyframe&) const = default;
};

inline constexpr int kGripperTarget = -1;

struct Channel {
  int target = 0;  // joint index, or kGripperTarget
  std::vector<Keyframe> keys;
  bool operator==(const Channel&) const = default;
};

struct Sequence {
  std::string name;
  std::string robot;
  std::vector<Channel> channels;

  double duration() const;
  const Channel* find(int target) const;
  bool operator==(const Sequence&) const = default;
};

// Keys closer than this are the same key.
inline constexpr double kTimeEpsilon = 1e-9;

std::string target_name(int target);

struct Frame {
  JointVector q;
  double gripper = 0.0;
};

double evaluate_channel(const Channel& channel, double t);
// Joints without a channel hold 0, as does the gripper.
Frame evaluate(const Sequence& seq, double t, int joint_count);

// Checks the sequence against a model: robot name, targets, ordering, value
// limits and handle geometry. Messages name the channel/key path.
void validate(const Sequence& seq, const RobotModel& model);
// Structural checks only (no model).
void validate_structure(const Sequence& seq);

// Inserting at an existing time replaces that key.
Sequence insert_keyframe(const Sequence& seq, const RobotModel& model, int target, const Keyframe& key);
Sequence delete_keyframe(const Sequence& seq, int target, double t);

// Copies every key with t in [t0, t1] to t + (paste_at - t0). Fails if any
// channel has a key inside the paste window.
Sequence duplicate_segment(const Sequence& seq, double t0, double t1, double paste_at);

// Maps key times in [t0, t1] to t0 + factor (t - t0), scales their handles,
// and shifts later keys by (factor - 1)(t1 - t0).
Sequence time_scale(const Sequence& seq, double t0, double t1, double factor);

// Uniform samples t_i = i / rate for i = 0..ceil(duration * rate).
TrajectoryLog sample(const Sequence& seq, double rate, int joint_count);

Sequence sequence_from_json(const nlohmann::json& j);
nlohmann::json sequence_to_json(const Sequence& seq);
Sequence load_sequence(const std::string& path);
void save_sequence(const Sequence& seq, const std::string& path);

}  // namespace mstudio
