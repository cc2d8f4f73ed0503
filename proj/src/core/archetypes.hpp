#pragma once

#include "arm_model.hpp"
#include "moa_metrics.hpp"
#include "trajectory_log.hpp"

#include <cstdint>
#include <string>

namespace mstudio::archetypes {

// Synthetic end-effector motions with known tonality labels, used to
// calibrate and check the classifier. Unset label fields are unconstrained.
struct Labeled {
  std::string name;
  Path path;
  IntendedTonalities label;
};

// Slow straight point-to-point minimum-jerk reach.
Labeled gentle_direct(double rate = 100.0);
// Fast min-jerk darts between random points with frequent reversals.
Labeled darting(std::uint32_t seed = 7, double rate = 100.0);
// Halting downward drops along -up with small lateral drift.
Labeled collapsing_heavy(const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ(), double rate = 100.0);

// Straight minimum-jerk segment from a to b over `duration`, sampled at `rate`.
Path min_jerk_line(const Eigen::Vector3d& a, const Eigen::Vector3d& b, double duration, double rate);

// Joint-space log that tracks `path` on `model` via chained IK (seeded from
// the previous sample). q_ref equals q, qd is a central difference.
TrajectoryLog joint_log_from_path(const RobotModel& model, const Path& path, const JointVector& seed,
                                  const std::string& name);

}  // namespace mstudio::archetypes
