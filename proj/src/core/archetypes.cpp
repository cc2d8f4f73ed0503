#include "archetypes.hpp"

#include <cmath>
#include <random>

namespace mstudio::archetypes {

namespace {

double min_jerk_s(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }

// Appends a rest-to-rest min-jerk move (excluding its first sample).
void append_move(Path& p, const Eigen::Vector3d& to, double duration) {
  const Eigen::Vector3d from = p.points.back();
  const auto steps = static_cast<int>(std::lround(duration / p.dt));
  for (int i = 1; i <= steps; ++i) {
    const double u = static_cast<double>(i) / steps;
    p.points.push_back(from + min_jerk_s(u) * (to - from));
  }
}

void append_hold(Path& p, double duration) {
  const auto steps = static_cast<int>(std::lround(duration / p.dt));
  for (int i = 0; i < steps; ++i) p.points.push_back(p.points.back());
}

}  // namespace

Path min_jerk_line(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double duration, double rate) {
  Path p;
  p.dt = 1.0 / rate;
  p.points.push_back(a);
  append_move(p, b, duration);
  return p;
}

Labeled gentle_direct(double rate) {
  Labeled l;
  l.name = "gentle-direct";
  l.path = min_jerk_line({0.9, -0.15, 0.0}, {1.1, 0.15, 0.0}, 3.0, rate);
  l.label = {Spatial::Unidirectional, Temporal::Neutral, Weight::Light, Flow::Unhindered};
  return l;
}

Labeled darting(std::uint32_t seed, double rate) {
  Labeled l;
  l.name = "darting";
  l.path.dt = 1.0 / rate;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  const Eigen::Vector3d centre(0.8, 0.3, 0.4);
  l.path.points.push_back(centre);
  // Alternating diagonal darts around the centre keep reversing direction.
  for (int k = 0; k < 12; ++k) {
    const double sx = (k % 2 == 0) ? 1.0 : -1.0;
    const double sy = (k % 4 < 2) ? 1.0 : -1.0;
    const Eigen::Vector3d target =
        centre + Eigen::Vector3d(0.15 * sx + jitter(rng), 0.12 * sy + jitter(rng), 0.1 * sx * sy + jitter(rng));
    append_move(l.path, target, 0.2);
  }
  append_move(l.path, centre, 0.2);
  l.label.spatial = Spatial::Multidirectional;
  l.label.weight = Weight::Strong;
  l.label.flow = Flow::Controlled;
  return l;
}

Labeled collapsing_heavy(const Eigen::Vector3d& up, double rate) {
  Labeled l;
  l.name = "collapsing-heavy";
  l.path.dt = 1.0 / rate;
  const Eigen::Vector3d down = -up.normalized();
  // Any unit vector orthogonal to `down` gives the lateral drift.
  const Eigen::Vector3d side = down.unitOrthogonal();
  l.path.points.push_back(Eigen::Vector3d(0.9, 0.2, 0.6));
  for (int k = 0; k < 5; ++k) {
    append_move(l.path, l.path.points.back() + 0.06 * down + 0.005 * side, 0.3);
    append_hold(l.path, 0.15);
  }
  l.label.spatial = Spatial::Unidirectional;
  l.label.weight = Weight::Heavy;
  l.label.flow = Flow::Controlled;
  return l;
}

TrajectoryLog joint_log_from_path(const RobotModel& model, const Path& path, const JointVector& seed,
                                  const std::string& name) {
  TrajectoryLog log;
  log.rate = 1.0 / path.dt;
  log.sequence_name = name;
  log.model_name = model.name;
  IkOptions opts;
  opts.pos_tol = 1e-9;
  opts.max_iterations = 500;
  JointVector q = seed;
  std::vector<JointVector> qs;
  for (const auto& p : path.points) {
    Pose target;
    target.position = p;
    q = inverse_kinematics(model, target, q, opts).solution;
    qs.push_back(q);
  }
  for (std::size_t i = 0; i < qs.size(); ++i) {
    LogRow r;
    r.t = static_cast<double>(i) * path.dt;
    r.q = qs[i];
    r.q_ref = qs[i];
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == qs.size() ? i : i + 1;
    r.qd = (qs[b] - qs[a]) / (static_cast<double>(b - a) * path.dt);
    log.rows.push_back(std::move(r));
  }
  return log;
}

}  // namespace mstudio::archetypes
