#include "sim_exec.hpp"

#include "error.hpp"
#include "json_util.hpp"

#include <algorithm>
#include <cmath>

namespace mstudio {

namespace {

JointVector vector_from_json(const nlohmann::json& j, const char* key, int n, const JointVector& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number()) return JointVector::Constant(n, v.get<double>());
  const auto values = json_util::require<std::vector<double>>(j, key, "gains");
  if (static_cast<int>(values.size()) != n) {
    throw Error(ErrorCode::Validation, std::string("gains.") + key + ": expected " +
                                           std::to_string(n) + " values");
  }
  return Eigen::Map<const JointVector>(values.data(), n);
}

}  // namespace

ControllerGains ControllerGains::defaults(const RobotModel& model) {
  ControllerGains g;
  const int n = model.dof();
  g.kp.resize(n);
  g.kd.resize(n);
  g.torque_limit.resize(n);
  for (int i = 0; i < n; ++i) {
    const double inertia = model.joints[i].inertia;
    g.kp[i] = 100.0 * inertia;
    g.kd[i] = 20.0 * inertia;
    g.torque_limit[i] = 200.0 * inertia;
  }
  return g;
}

void validate(const ControllerGains& gains, const RobotModel& model) {
  const int n = model.dof();
  if (gains.kp.size() != n || gains.kd.size() != n || gains.torque_limit.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "gains: one value per joint required");
  }
  for (int i = 0; i < n; ++i) {
    const std::string at = "gains[" + std::to_string(i) + "]";
    if (!(gains.kp[i] > 0.0)) throw Error(ErrorCode::Validation, at + ".kp must be positive");
    if (!(gains.kd[i] >= 0.0)) throw Error(ErrorCode::Validation, at + ".kd must be >= 0");
    if (!(gains.torque_limit[i] > 0.0)) {
      throw Error(ErrorCode::Validation, at + ".torque_limit must be positive");
    }
  }
}

ControllerGains gains_from_json(const nlohmann::json& j, const RobotModel& model) {
  json_util::check_version(j, "gains");
  const ControllerGains d = ControllerGains::defaults(model);
  ControllerGains g;
  g.kp = vector_from_json(j, "kp", model.dof(), d.kp);
  g.kd = vector_from_json(j, "kd", model.dof(), d.kd);
  g.torque_limit = vector_from_json(j, "torque_limit", model.dof(), d.torque_limit);
  validate(g, model);
  return g;
}

nlohmann::json gains_to_json(const ControllerGains& g) {
  auto vec = [](const JointVector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"kp", vec(g.kp)}, {"kd", vec(g.kd)}, {"torque_limit", vec(g.torque_limit)}};
}

const char* to_string(SimMode m) {
  switch (m) {
    case SimMode::Idle: return "idle";
    case SimMode::Teleop: return "teleop";
    case SimMode::Playing: return "playing";
  }
  return "idle";
}

bool SimState::operator==(const SimState& o) const {
  return t == o.t && q == o.q && qd == o.qd && gripper == o.gripper && mode == o.mode &&
         fault == o.fault && q_ref == o.q_ref && t_play == o.t_play;
}

SimState initial_state(const RobotModel& model) {
  SimState s;
  s.q = model.home();
  s.qd = JointVector::Zero(model.dof());
  s.q_ref = s.q;
  s.gripper = model.gripper_min;
  return s;
}

SimState step(const SimState& state, const RobotModel& model, const ControllerGains& gains,
              const Reference& ref, double dt) {
  if (!(dt > 0.0 && dt <= kMaxDt)) {
    throw Error(ErrorCode::InvalidArgument, "step: dt must be in (0, 0.01] s");
  }
  const int n = model.dof();
  if (state.q.size() != n || ref.q.size() != n || ref.qd.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "step: state/reference size differs from model");
  }
  SimState s = state;
  for (int i = 0; i < n; ++i) {
    const JointSpec& j = model.joints[i];
    double tau = gains.kp[i] * (ref.q[i] - s.q[i]) + gains.kd[i] * (ref.qd[i] - s.qd[i]);
    tau = std::clamp(tau, -gains.torque_limit[i], gains.torque_limit[i]);
    const double qdd = (tau - j.damping * s.qd[i] - j.gravity_torque) / j.inertia;
    double qd = std::clamp(s.qd[i] + qdd * dt, -j.vel_limit, j.vel_limit);
    double q = s.q[i] + qd * dt;
    if (q <= j.min) {
      q = j.min;
      if (qd < 0.0) qd = 0.0;
    } else if (q >= j.max) {
      q = j.max;
      if (qd > 0.0) qd = 0.0;
    }
    s.q[i] = q;
    s.qd[i] = qd;
  }
  const double max_dg = kGripperRate * dt;
  const double target = std::clamp(ref.gripper, model.gripper_min, model.gripper_max);
  s.gripper += std::clamp(target - s.gripper, -max_dg, max_dg);
  s.t = state.t + dt;
  return s;
}

Playback::Playback(const Sequence& seq, const RobotModel& model, double record_rate, double dt)
    : seq_(seq), joints_(model.dof()), dt_(dt) {
  if (!(dt > 0.0 && dt <= kMaxDt)) throw Error(ErrorCode::InvalidArgument, "playback: bad dt");
  if (!(record_rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "playback: rate must be positive");
  validate(seq, model);
  const double per = 1.0 / (record_rate * dt);
  steps_per_record_ = std::lround(per);
  if (steps_per_record_ < 1 || std::abs(per - static_cast<double>(steps_per_record_)) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument,
                "playback: record period must be a whole number of simulation steps");
  }
  const long records = static_cast<long>(std::ceil(seq.duration() * record_rate - 1e-9));
  total_steps_ = std::max(records, 0L) * steps_per_record_;
  log_.rate = record_rate;
  log_.sequence_name = seq.name;
  log_.model_name = model.name;
}

Reference Playback::reference_at(double t) const {
  const Frame f = evaluate(seq_, t, joints_);
  Reference r{f.q, JointVector::Zero(joints_), f.gripper};
  const double h = dt_;
  const Frame ahead = evaluate(seq_, t + h, joints_);
  if (t >= h) {
    r.qd = (ahead.q - evaluate(seq_, t - h, joints_).q) / (2.0 * h);
  } else {
    r.qd = (ahead.q - f.q) / h;
  }
  return r;
}

void Playback::tick(SimState& state, const RobotModel& model, const ControllerGains& gains) {
  if (recorded_final_) return;
  const Reference ref = reference_at(static_cast<double>(step_) * dt_);
  if (step_ % steps_per_record_ == 0) {
    LogRow row;
    row.t = static_cast<double>(step_ / steps_per_record_) / log_.rate;
    row.q_ref = ref.q;
    row.q = state.q;
    row.qd = state.qd;
    row.gripper = state.gripper;
    log_.rows.push_back(std::move(row));
  }
  if (step_ >= total_steps_) {
    recorded_final_ = true;
    return;
  }
  state = step(state, model, gains, ref, dt_);
  ++step_;
  state.t_play = static_cast<double>(step_) * dt_;
}

TrajectoryLog play_sequence(SimState& state, const RobotModel& model, const ControllerGains& gains,
                            const Sequence& seq, double record_rate, double dt) {
  if (state.mode != SimMode::Idle) throw Error(ErrorCode::Busy, "play_sequence: simulation is not idle");
  validate(gains, model);
  Playback pb(seq, model, record_rate, dt);
  state.mode = SimMode::Playing;
  state.t_play = 0.0;
  while (!pb.done()) pb.tick(state, model, gains);
  state.mode = SimMode::Idle;
  state.q_ref = state.q;
  return pb.take_log();
}

SimState run_teleop_tick(const SimState& state, const RobotModel& model,
                         const ControllerGains& gains, const TeleopState& teleop, double dt) {
  const int n = model.dof();
  JointVector v = teleop.commanded_vel.size() == n ? teleop.commanded_vel : JointVector::Zero(n);
  if (teleop.fault) v.setZero();
  JointVector q_ref = state.q_ref.size() == n ? state.q_ref : state.q;
  JointVector qd_ref = v;
  bool hit_limit = false;
  for (int i = 0; i < n; ++i) {
    const JointSpec& j = model.joints[i];
    q_ref[i] += v[i] * dt;
    if (q_ref[i] >= j.max) {
      q_ref[i] = j.max;
      qd_ref[i] = 0.0;
      hit_limit = hit_limit || v[i] > 0.0;
    } else if (q_ref[i] <= j.min) {
      q_ref[i] = j.min;
      qd_ref[i] = 0.0;
      hit_limit = hit_limit || v[i] < 0.0;
    }
  }
  SimState s = step(state, model, gains, {q_ref, qd_ref, teleop.gripper_cmd}, dt);
  s.q_ref = q_ref;
  s.mode = v.isZero(0.0) ? SimMode::Idle : SimMode::Teleop;
  s.fault = teleop.fault;
  if (hit_limit) s.fault = FaultKind::JointLimit;
  return s;
}

}  // namespace mstudio
